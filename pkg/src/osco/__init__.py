"""osco: causal grey-box optimisation with an observe-or-intervene
optimal-stopping rule.

The package optimises a target variable of a structural causal model under
an evaluation budget.  At every step it proposes an intervention with a
cost-aware acquisition over the possibly-optimal intervention sets, then
decides whether to evaluate it by running the experiment or by buying one
more (cheap) observation and estimating the effect through the
do-calculus.  The observe-or-intervene choice is a one-step-lookahead
optimal-stopping rule.
"""

__version__ = "0.1.0"
