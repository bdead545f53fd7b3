import pytest

from livenesslab.catalog import ASSERTION_SINGLE, LINK, SERVER, CatalogId
from livenesslab.checker import (
    BudgetExceeded, CheckRun, check_liveness_lasso,
    competing_rounds_config, explore, formula_oracle, safety_scan,
)
from livenesslab.machine import make_config
from livenesslab.temporal import eval_expr
from livenesslab.catalog import build


def test_formula_oracle_values():
    assert formula_oracle(2, 3, 0) == 7
    assert formula_oracle(2, 3, 1) == 10
    assert formula_oracle(2, 3, 2) == 13
    assert formula_oracle(2, 3, 3) == 13          # plateau past x = i
    assert formula_oracle(3, 4, 2) == 17
    assert formula_oracle(4, 4, 5) == 25          # 16 + 9
    # with no unstable ticks the proposer count is irrelevant
    for j in (3, 4, 5):
        lengths = {formula_oracle(i, j, 0) for i in (1, 2, 3, 4, 7)}
        assert len(lengths) == 1
    with pytest.raises(ValueError):
        formula_oracle(0, 3, 0)
    with pytest.raises(ValueError):
        formula_oracle(2, 3, -1)


def test_explore_matches_oracle_on_2p3a():
    cfg = make_config(2, 3)
    for x in (0, 1, 2, 3):
        run = explore(cfg, x)
        assert run.stable_length == formula_oracle(2, 3, x), x
        assert run.stable_start == x
        assert run.distinct_states <= run.states_generated
        assert run.stable_length >= run.stable_start


def test_explore_rejects_negative_start_and_tiny_budget():
    cfg = make_config(2, 3)
    with pytest.raises(ValueError):
        explore(cfg, -1)
    with pytest.raises(BudgetExceeded):
        explore(cfg, 2, max_states=50)


def test_explore_deterministic_counters():
    cfg = make_config(2, 4)
    a = explore(cfg, 1)
    b = explore(cfg, 1)
    assert (a.stable_length, a.states_generated, a.distinct_states) == \
        (b.stable_length, b.states_generated, b.distinct_states)


def test_distinct_states_monotone_on_the_grid():
    # new competing rounds unlock while x <= i, so the counts grow
    # superlinearly and then saturate; what the explorer guarantees is
    # monotone growth and exact determinism
    for (i, j) in ((2, 3), (2, 4)):
        cfg = make_config(i, j)
        counts = [explore(cfg, x).distinct_states for x in range(i + 2)]
        assert all(b >= a for a, b in zip(counts, counts[1:])), counts


def test_checkrun_validation():
    cfg = make_config(2, 3)
    with pytest.raises(ValueError):
        CheckRun(cfg, 5, 4, 10, 5, 0.0)
    with pytest.raises(ValueError):
        CheckRun(cfg, 0, 7, 5, 10, 0.0)


def test_safety_scan_finds_no_violations():
    rep = safety_scan(competing_rounds_config(2, 3))
    assert rep.violations == ()
    assert rep.distinct_states > 100_000


def test_lasso_search_fair_alwq_somelearn_counterexample():
    cfg = competing_rounds_config(2, 3)
    res = check_liveness_lasso(cfg, CatalogId(LINK, "Fair"),
                               CatalogId(SERVER, "Alw-Q"),
                               CatalogId(ASSERTION_SINGLE, "Some-Learn"))
    assert res.is_counterexample
    tr = res.trace
    assert eval_expr(build(CatalogId(LINK, "Fair")), tr).is_holds
    assert eval_expr(build(CatalogId(SERVER, "Alw-Q")), tr).is_holds
    assert eval_expr(build(CatalogId(ASSERTION_SINGLE, "Some-Learn")), tr).is_violated


def test_lasso_search_raw_alw_eachvote_counterexample():
    cfg = competing_rounds_config(2, 3)
    res = check_liveness_lasso(cfg, CatalogId(LINK, "Raw"),
                               CatalogId(SERVER, "Alw"),
                               CatalogId(ASSERTION_SINGLE, "Each-Vote"))
    assert res.is_counterexample
    assert eval_expr(build(CatalogId(SERVER, "Alw")), res.trace).is_holds
    assert eval_expr(build(CatalogId(ASSERTION_SINGLE, "Each-Vote")),
                     res.trace).is_violated


def test_lasso_search_budget_reports_undetermined():
    cfg = competing_rounds_config(2, 3)
    res = check_liveness_lasso(cfg, CatalogId(LINK, "Fair"),
                               CatalogId(SERVER, "Alw"),
                               CatalogId(ASSERTION_SINGLE, "Some-Learn"),
                               max_states=500)
    assert res.outcome == "undetermined"
    assert res.bound == 500


def test_lasso_search_fair_alw_somelearn_holds_by_exhaustion():
    cfg = competing_rounds_config(2, 3)
    res = check_liveness_lasso(cfg, CatalogId(LINK, "Fair"),
                               CatalogId(SERVER, "Alw"),
                               CatalogId(ASSERTION_SINGLE, "Some-Learn"))
    assert res.outcome == "holds"
    assert res.states_explored > 100_000
