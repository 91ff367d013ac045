"""Crank-rocker four-bar linkage synthesis toolkit.

Generates linkage mechanisms that hit user-specified kinematic (maximum
path distance) and quasi-static (torque-per-force ratio) targets, using a
conditional adversarial generator with a surrogate predictor, plus an
NSGA-II baseline for comparison.
"""

from linksynth.kinematics import Linkage, LengthRanges, NoAssembly
from linksynth.conditions import ConditionPair, InvalidLinkage, evaluate

__all__ = [
    "Linkage",
    "LengthRanges",
    "NoAssembly",
    "ConditionPair",
    "InvalidLinkage",
    "evaluate",
]

__version__ = "0.1.0"
