"""Homotopy path following with Taylor predictors and Newton correctors"""

from .following import (
    HomotopySchedule,
    PathStep,
    PathTrace,
    TaylorPrediction,
    choose_regime,
    follow_path,
    taylor_update,
)

__all__ = [
    "HomotopySchedule",
    "PathStep",
    "PathTrace",
    "TaylorPrediction",
    "choose_regime",
    "follow_path",
    "taylor_update",
]
