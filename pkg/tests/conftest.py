from pathlib import Path

import numpy as np
import pytest

from src.analysis.kkt import PrimalDualPoint
from src.model.parser import load_problem

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_file(name: str) -> Path:
    return FIXTURES / name


def point(x, y, z, p) -> PrimalDualPoint:
    return PrimalDualPoint(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float), np.asarray(p, float))


@pytest.fixture
def p1():
    return load_problem(fixture_file("p1.nlp"))


@pytest.fixture
def p2():
    return load_problem(fixture_file("p2.nlp"))


@pytest.fixture
def p3():
    return load_problem(fixture_file("p3.nlp"))


@pytest.fixture
def p3_variant():
    return load_problem(fixture_file("p3_variant.nlp"))


@pytest.fixture
def p4():
    return load_problem(fixture_file("p4.nlp"))


@pytest.fixture
def c1_lp():
    return load_problem(fixture_file("c1_lp.nlp"))


@pytest.fixture
def c2_soc():
    return load_problem(fixture_file("c2_soc.nlp"))


@pytest.fixture
def p1_point():
    """Closed-form KKT point of p1 at p = 0."""
    return point([0.5, 0.5], [-0.5], [], [0.0])


@pytest.fixture
def p2_point():
    """p2 at p = 0.5: x = 0.5, z = 0.5."""
    return point([0.5], [], [0.5], [0.5])


@pytest.fixture
def p2_kink():
    """p2 at p = 1, weakly active constraint."""
    return point([1.0], [], [0.0], [1.0])


@pytest.fixture
def p3_point():
    return point([1.0], [], [0.5, 0.5], [2.0])


@pytest.fixture
def p3_variant_point():
    return point([1.0], [], [0.5, 0.5], [2.0, 0.0])


@pytest.fixture
def c1_lp_point():
    return point([0.0, 1.0], [0.0], [1.0, 0.0], [0.0])


@pytest.fixture
def c2_soc_point():
    return point([1.0, 1.0, 0.0], [1.0], [0.5], [1.0, 0.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
