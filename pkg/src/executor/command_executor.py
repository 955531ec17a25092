"""Command executor for the sensikit command line"""

import logging
import time
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.analysis.cq import CQReport, check_cq
from src.analysis.kkt import PrimalDualPoint
from src.conic.loader import load_conic
from src.conic.residual import (
    ConicProblem,
    HSDPoint,
    conic_jacobian_b,
    conic_kkt_residual,
    conic_sensitivity,
    residual_map,
    solve_polyhedral,
)
from src.errors import (
    ActiveSetChangeError,
    DimensionMismatchError,
    RegularityNotCertifiedError,
    ResolveError,
    SensikitError,
)
from src.model.autodiff import eval_values
from src.model.expr import is_affine_in_x
from src.model.parser import load_problem
from src.model.problem import ParametricNLP
from src.oracle.fd_oracle import (
    OracleConfig,
    Resolution,
    compare,
    fd_dini_quotients,
    fd_directional,
    fd_jacobian,
    fd_value_derivatives,
    resolve,
)
from src.path.following import HomotopySchedule, choose_regime, follow_path
from src.report import builder
from src.report.schemas import Report
from src.sensitivity.directional import (
    DirectionalDerivative,
    degenerate_directional,
    directional_qp,
    ld_derivative,
)
from src.sensitivity.fiacco import (
    Regime,
    build_fiacco_system,
    fiacco_jacobian,
    forward_sensitivity,
    lp_basis_sensitivity,
)
from src.solvers.barrier import barrier_kkt_sensitivity, barrier_kkt_solve, barrier_sensitivity
from src.value.value_function import (
    ValueReport,
    directional_summary,
    shadow_prices,
    value_gradient_hessian,
    value_gradient_objective_only,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CERTIFIED = 2

COMMANDS = ("solve", "analyze", "diff", "directional", "value", "path", "conic-diff", "oracle")


def is_lp(nlp: ParametricNLP) -> bool:
    return all(is_affine_in_x(expr) for _, expr in nlp.labelled_expressions())


def _conic_fd_jacobian_b(prob: ConicProblem, step: float = 1e-6):
    """Central differences of re-solved polyhedral conic programs in each b_k."""
    columns = []
    for k in range(prob.m):
        e = np.zeros(prob.m)
        e[k] = step
        plus = solve_polyhedral(ConicProblem(prob.A, prob.b + e, prob.c, prob.cone))[0]
        minus = solve_polyhedral(ConicProblem(prob.A, prob.b - e, prob.c, prob.cone))[0]
        columns.append((plus - minus) / (2.0 * step))
    jac = np.column_stack(columns) if columns else np.zeros((prob.n, 0))
    return jac, [step], None, jac


class CommandExecutor:
    """Runs one command and fills a report, mapping failures to exit codes"""

    def __init__(self, oracle_config: OracleConfig | None = None):
        self.oracle_config = oracle_config or OracleConfig()

    def run(self, command: str, problem: str, **options) -> tuple[Report, int]:
        """Execute ``command`` on the problem file and return the report with its exit code"""
        started = time.perf_counter()
        report = builder.new_report(Path(problem).stem, command)
        if command not in COMMANDS:
            raise ValueError(f"unknown command '{command}'")
        handler = getattr(self, command.replace("-", "_"))

        try:
            handler(report, problem, **options)
            exit_code = EXIT_OK
            logger.info(f"Command '{command}' finished")
        except RegularityNotCertifiedError as e:
            logger.error(f"Regularity not certified: {e}")
            report.error = builder.error_model(e)
            exit_code = EXIT_NOT_CERTIFIED
        except (SensikitError, OSError, ValueError, ValidationError) as e:
            logger.error(f"Command '{command}' failed: {e}")
            report.error = builder.error_model(e)
            exit_code = EXIT_INPUT
        return builder.finish(report, started, exit_code), exit_code

    # shared steps

    def _load(self, report: Report, problem: str) -> ParametricNLP:
        nlp = load_problem(problem)
        report.problem = nlp.name
        return nlp

    def _solve(self, report: Report, nlp: ParametricNLP, p, r_schedule=None) -> Resolution:
        config = self.oracle_config
        if r_schedule is not None:
            config = OracleConfig(**{**config.model_dump(), "r_schedule": tuple(r_schedule)})
        resolution = resolve(nlp, p, config)
        report.point = builder.point_model(nlp, resolution.point)
        report.solver = builder.barrier_trail(
            list(resolution.states),
            corrector_iterations=resolution.correction.iterations,
            repairs=resolution.correction.repairs,
        )
        return resolution

    def _analyze(self, report: Report, nlp: ParametricNLP, point: PrimalDualPoint) -> CQReport:
        cq = check_cq(nlp, point)
        report.cq = builder.cq_model(cq)
        return cq

    def _directions(self, nlp: ParametricNLP, directions) -> list[np.ndarray]:
        if not directions:
            return [np.eye(nlp.ell)[k] for k in range(nlp.ell)]
        out = [np.asarray(h, dtype=float).reshape(-1) for h in directions]
        for h in out:
            if h.size != nlp.ell:
                raise DimensionMismatchError(f"direction has length {h.size}, expected {nlp.ell}")
        return out

    def _attach(self, report: Report, quantity: str, producer, analytic=None):
        """Run an oracle producer; an active-set change in the stencil is reported, not fatal."""
        try:
            estimate, steps, monotone, value = producer()
        except ActiveSetChangeError as e:
            logger.warning(f"Oracle for {quantity} skipped: {e}")
            report.oracle.append(builder.oracle_model(f"{quantity} (skipped: {e})", None, []))
            return
        comparison = None if analytic is None else compare(analytic, value)
        report.oracle.append(builder.oracle_model(quantity, estimate, steps, comparison, monotone))

    # commands

    def solve(self, report: Report, problem: str, at=None, r_schedule=None, mu=None, **_):
        nlp = self._load(report, problem)
        resolution = self._solve(report, nlp, at, r_schedule)
        sweep = []
        for state in resolution.states:
            try:
                sweep.append(barrier_sensitivity(nlp, state))
            except SensikitError as e:
                logger.warning(f"No barrier sensitivity at r={state.r:.1e}: {e}")
                sweep = None
                break
        report.solver = builder.barrier_trail(
            list(resolution.states),
            sweep,
            resolution.correction.iterations,
            resolution.correction.repairs,
        )
        if mu is not None:
            central = barrier_kkt_solve(nlp, resolution.point.p, mu=mu, start=resolution.point)
            sens = barrier_kkt_sensitivity(nlp, central)
            report.solver.mu = mu
            report.sensitivity = builder.sensitivity_model(sens)

    def analyze(self, report: Report, problem: str, at=None, **_):
        nlp = self._load(report, problem)
        resolution = self._solve(report, nlp, at)
        self._analyze(report, nlp, resolution.point)

    def diff(self, report: Report, problem: str, at=None, degenerate=False, directions=None, oracle=False, **_):
        nlp = self._load(report, problem)
        point = self._solve(report, nlp, at).point
        cq = self._analyze(report, nlp, point)

        if degenerate:
            for h in self._directions(nlp, directions):
                d = degenerate_directional(nlp, point, h, cq=cq)
                report.directional.append(builder.directional_model(d))
                if oracle:
                    self._attach_directional(report, nlp, point, d)
            return

        if is_lp(nlp):
            sens = lp_basis_sensitivity(nlp, point, cq=cq)
        else:
            sens = fiacco_jacobian(nlp, point, cq=cq)
        report.sensitivity = builder.sensitivity_model(sens)
        if oracle:
            config = self.oracle_config

            def producer():
                fd = fd_jacobian(nlp, point.p, config)
                return fd.jac_x, fd.steps, None, fd.jac_x

            self._attach(report, "jac_x", producer, sens.jac_x)

    def directional(self, report: Report, problem: str, at=None, directions=None, oracle=False, **_):
        nlp = self._load(report, problem)
        point = self._solve(report, nlp, at).point
        cq = self._analyze(report, nlp, point)
        hs = self._directions(nlp, directions)

        if directions and len(hs) > 1:
            R = np.column_stack(hs)
            report.ld = builder.ld_model(ld_derivative(nlp, point, R, cq=cq))
            return

        for h in hs:
            d = self._directional_by_regime(nlp, point, h, cq)
            report.directional.append(builder.directional_model(d))
            if oracle:
                self._attach_directional(report, nlp, point, d)

    def _directional_by_regime(self, nlp, point, h, cq: CQReport) -> DirectionalDerivative:
        regime = choose_regime(cq)
        logger.info(f"Directional derivative along {h.tolist()} in the {regime.value} regime")
        if regime == Regime.FIACCO:
            system = build_fiacco_system(nlp, point, cq.active.active)
            dx, dy, dz = system.expand(forward_sensitivity(system, h))
            return DirectionalDerivative(h, dx, dy, dz, Regime.FIACCO)
        if regime == Regime.DIRECTIONAL:
            return directional_qp(nlp, point, h, cq=cq)
        return degenerate_directional(nlp, point, h, cq=cq)

    def _attach_directional(self, report: Report, nlp, point: PrimalDualPoint, d: DirectionalDerivative):
        config = self.oracle_config

        def producer():
            fd = fd_directional(nlp, point.p, d.h, config)
            return fd.quotients, fd.steps, fd.monotone, fd.estimate

        self._attach(report, f"dx along {d.h.tolist()}", producer, d.dx)

    def value(self, report: Report, problem: str, at=None, directions=None, method="fiacco", oracle=False, **_):
        nlp = self._load(report, problem)
        point = self._solve(report, nlp, at).point
        cq = self._analyze(report, nlp, point)

        if method == "shadow":
            result = shadow_prices(nlp, point)
        elif method == "objective":
            result = value_gradient_objective_only(nlp, point)
        elif method == "fiacco" and not directions:
            result = value_gradient_hessian(nlp, point, fiacco_jacobian(nlp, point, cq=cq))
        elif method == "fiacco":
            summaries = tuple(directional_summary(nlp, [point], h) for h in self._directions(nlp, directions))
            phi, _, _ = eval_values(nlp, point.x, point.p)
            regime = choose_regime(cq).value
            result = ValueReport(phi, None, None, regime, "directional", directional=summaries)
        else:
            raise ValueError(f"unknown value method '{method}'")
        report.value = builder.value_model(result)

        if not oracle:
            return
        config = self.oracle_config
        if result.gradient is not None:

            def gradient():
                fd = fd_value_derivatives(nlp, point.p, config)
                return {"gradient": fd.gradient, "hessian": fd.hessian}, fd.steps, None, fd.gradient

            self._attach(report, "value gradient", gradient, result.gradient)
        for summary in result.directional:

            def quotients(h=summary.h):
                fd = fd_dini_quotients(nlp, point.p, h, config)
                return list(fd.quotients), fd.steps, None, np.array(fd.quotients[-1])

            self._attach(report, f"value along {summary.h.tolist()}", quotients, summary.value)

    def path(self, report: Report, problem: str, at=None, to=None, directions=None, steps=10, adaptive=False, **_):
        nlp = self._load(report, problem)
        start = self._solve(report, nlp, at).point
        if to is None:
            if not directions:
                raise ValueError("path needs --to or --direction")
            to = start.p + np.asarray(directions[0], dtype=float)
        schedule = HomotopySchedule.uniform(start.p, to, steps)
        trace = follow_path(nlp, start, schedule, adaptive=adaptive)

        endpoint_error = None
        if trace.completed:
            try:
                cold = resolve(nlp, schedule.p_end, self.oracle_config)
                endpoint_error = float(np.max(np.abs(trace.final.x - cold.point.x), initial=0.0))
            except ResolveError as e:
                logger.warning(f"Endpoint check skipped: {e}")
        report.path = builder.path_model(trace, endpoint_error)

    def conic_diff(self, report: Report, problem: str, db=None, dc=None, oracle=False, **_):
        prob, model = load_conic(problem)
        if model.solution is not None:
            solution = tuple(np.asarray(v, dtype=float) for v in (model.solution.x, model.solution.y, model.solution.s))
        else:
            solution = solve_polyhedral(prob)
        x, y, s = solution
        kkt = conic_kkt_residual(prob, x, y, s)
        hsd = float(np.linalg.norm(residual_map(prob, HSDPoint.from_solution(prob, x, y, s).z).R))

        perturbation = model.perturbation
        if db is None and dc is None and perturbation is not None:
            dA, db, dc = perturbation.dA, perturbation.db, perturbation.dc
        else:
            dA = None

        if db is None and dc is None and dA is None:
            jac = conic_jacobian_b(prob, x, y, s)
            report.conic = builder.conic_model(prob, solution, kkt, hsd, jac_x_b=jac)
            if oracle:
                self._attach(report, "dx/db", lambda: _conic_fd_jacobian_b(prob), jac)
            return

        sens = conic_sensitivity(prob, x, y, s, dA, db, dc)
        report.conic = builder.conic_model(prob, solution, kkt, hsd, sens)

    def oracle(self, report: Report, problem: str, at=None, directions=None, **_):
        nlp = self._load(report, problem)
        point = self._solve(report, nlp, at).point
        config = self.oracle_config

        def jacobian():
            fd = fd_jacobian(nlp, point.p, config)
            return {"jac_x": fd.jac_x, "jac_y": fd.jac_y, "jac_z": fd.jac_z}, fd.steps, None, fd.jac_x

        self._attach(report, "jacobian", jacobian)
        for h in directions or []:

            def quotient(h=np.asarray(h, dtype=float)):
                fd = fd_directional(nlp, point.p, h, config)
                return fd.quotients, fd.steps, fd.monotone, fd.estimate

            self._attach(report, f"dx along {list(h)}", quotient)

        def value():
            fd = fd_value_derivatives(nlp, point.p, config)
            return {"phi": fd.phi, "gradient": fd.gradient, "hessian": fd.hessian}, fd.steps, None, fd.gradient

        self._attach(report, "value", value)
