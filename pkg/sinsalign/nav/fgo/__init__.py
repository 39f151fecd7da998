from sinsalign.nav.fgo.aligner import BiasEstimate, FgoResult, align_history, attitude_output, fgo_align
from sinsalign.nav.fgo.domain import ConstantAttitude, KeyframeSnapshot, NodeState, NoiseModel, SolveReport
from sinsalign.nav.fgo.factors import ins_factor, measurement_factor, prior_factor
from sinsalign.nav.fgo.graph import FactorGraph, add_keyframe
from sinsalign.nav.fgo.solver import solve

__all__ = [
    "BiasEstimate",
    "ConstantAttitude",
    "FactorGraph",
    "FgoResult",
    "KeyframeSnapshot",
    "NodeState",
    "NoiseModel",
    "SolveReport",
    "add_keyframe",
    "align_history",
    "attitude_output",
    "fgo_align",
    "ins_factor",
    "measurement_factor",
    "prior_factor",
    "solve",
]
