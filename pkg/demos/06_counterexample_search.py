"""Bounded lasso search: which assumption pairs doom which assertions."""

from livenesslab.catalog import ASSERTION_SINGLE, LINK, SERVER, CatalogId
from livenesslab.checker import check_liveness_lasso, competing_rounds_config

cfg = competing_rounds_config(2, 3)

cases = [
    ("Fair", "Alw-Q", "Some-Learn"),   # an always-up quorum is not enough
    ("Raw", "Alw", "Each-Vote"),       # lossy links defeat everything
    ("Fair", "Alw", "Some-Learn"),     # full stability forces learning
]

for link, server, assertion in cases:
    res = check_liveness_lasso(cfg,
                               CatalogId(LINK, link),
                               CatalogId(SERVER, server),
                               CatalogId(ASSERTION_SINGLE, assertion))
    line = f"({link}, {server}) vs {assertion}:"
    if res.is_counterexample:
        tr = res.trace
        print(f"{line} counterexample lasso, {len(tr.states)} states, "
              f"cycle at {tr.loop_start} ({res.states_explored} states searched)")
    else:
        print(f"{line} {res.outcome} after exhausting "
              f"{res.states_explored} skeleton states")
