"""Graph-theoretic causal inference: d-separation, identification, set families."""

from .dsep import c_component_of, c_components, d_separated
from .estimand import (
    CondFactor,
    Estimand,
    EstimandNode,
    Marginal,
    Product,
    Quotient,
    all_variables,
    canonical,
    free_variables,
    pretty,
    structurally_equal,
)
from .identify import (
    Identifiable,
    IdResult,
    NotIdentifiable,
    find_adjustment_set,
    identify,
    simplify_node,
)
from .sets import (
    enumerate_mis,
    enumerate_pomis,
    family_sorted,
    minimal_observation_set,
    muct_and_border,
)

__all__ = [
    "CondFactor",
    "Estimand",
    "EstimandNode",
    "IdResult",
    "Identifiable",
    "Marginal",
    "NotIdentifiable",
    "Product",
    "Quotient",
    "all_variables",
    "c_component_of",
    "c_components",
    "canonical",
    "d_separated",
    "enumerate_mis",
    "enumerate_pomis",
    "family_sorted",
    "find_adjustment_set",
    "free_variables",
    "identify",
    "minimal_observation_set",
    "muct_and_border",
    "pretty",
    "simplify_node",
    "structurally_equal",
]
