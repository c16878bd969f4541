"""The observe-or-intervene stopping rule and its validation oracle."""

from .decide import INTERVENE, OBSERVE, StoppingDecision, decide
from .oracle import (
    DpSolution,
    StoppingInstance,
    backward_induction_oracle,
    lookahead_stop_set,
    lookahead_value,
    make_monotone_instance,
    make_random_instance,
)
from .reward import StoppingContext, StoppingWeights, stopping_reward
from .volume import DEFAULT_RATIO_CAP, volume_ratio

__all__ = [
    "DEFAULT_RATIO_CAP",
    "DpSolution",
    "INTERVENE",
    "OBSERVE",
    "StoppingContext",
    "StoppingDecision",
    "StoppingInstance",
    "StoppingWeights",
    "backward_induction_oracle",
    "decide",
    "lookahead_stop_set",
    "lookahead_value",
    "make_monotone_instance",
    "make_random_instance",
    "stopping_reward",
    "volume_ratio",
]
