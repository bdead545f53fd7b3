"""Liveness laboratory for quorum-based consensus.

A temporal property language with three-valued evaluation over finite and
lasso traces, the full catalog of link/server assumptions and liveness
assertions with their implication hierarchy, an executable single-value
Paxos machine with adversarial schedulers, and an explicit-state checker
that reproduces the stable-duration experiment's closed form.
"""

from .catalog import (
    CatalogId, assertion_multi, assertion_single, hierarchy_edges,
    link_property, server_property,
)
from .checker import CheckRun, check_liveness_lasso, explore, formula_oracle
from .language import parse, print_expr
from .machine import SystemConfig, make_config
from .temporal import (
    Interval, ObservationState, PropertyExpr, Trace, Verdict, desugar,
    eval_expr, normalize_at,
)

__all__ = [
    "CatalogId", "CheckRun", "Interval", "ObservationState", "PropertyExpr",
    "SystemConfig", "Trace", "Verdict", "assertion_multi", "assertion_single",
    "check_liveness_lasso", "desugar", "eval_expr", "explore",
    "formula_oracle", "hierarchy_edges", "link_property", "make_config",
    "normalize_at", "parse", "print_expr", "server_property",
]

__version__ = "0.1.0"
