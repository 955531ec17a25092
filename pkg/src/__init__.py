"""sensikit - post-optimal sensitivity analysis for parametric programs"""


__version__ = "1.0.0"
