"""Adversarial schedules: assumptions held or broken to order."""

from livenesslab.adversary import (
    SATISFY, VIOLATE, AssumptionTarget, Demand, alwq_adversary, generate,
    raw_blackout, run_schedule, validate,
)
from livenesslab.catalog import (
    CatalogId, LINK, SERVER, assertion_single, link_property, server_property,
)
from livenesslab.machine import make_config
from livenesslab.temporal import eval_expr

cfg = make_config(2, 3)

print("== the delayed-prepare adversary ==")
tr = alwq_adversary(cfg)
print("  Fair      :", eval_expr(link_property("Fair"), tr))
print("  Alw-Q     :", eval_expr(server_property("Alw-Q"), tr))
print("  Some-Learn:", eval_expr(assertion_single("Some-Learn"), tr))
worst = max(len((frozenset(cfg.servers) | frozenset(cfg.clients)) - st.nf_procs)
            for st in tr.states)
print(f"  at most {worst} server down at any tick")

print("\n== the blackout ==")
tr = raw_blackout(cfg)
print("  messages sent:", len(tr.states[-1].sent),
      " received:", len(tr.states[-1].received))
print("  Some-Learn:", eval_expr(assertion_single("Some-Learn"), tr))

print("\n== generated schedules (validated, seed-reproducible) ==")
for link, lmode, server, smode in [
    ("Fair", SATISFY, "Alw", SATISFY),
    ("Fair", SATISFY, "Q-Alw", VIOLATE),
    ("Fair", VIOLATE, "Alw", SATISFY),
    ("Sure", SATISFY, "PQ-Dur", VIOLATE),
]:
    lp = CatalogId(LINK, link, (8,) if link == "Sure" else ())
    sp = CatalogId(SERVER, server, (3,) if server == "PQ-Dur" else ())
    target = AssumptionTarget(Demand(lp, lmode), Demand(sp, smode))
    schedule = generate(target, cfg, seed=11)
    verdicts = validate(run_schedule(schedule), target)
    wanted = f"{lp.label()}:{lmode} {sp.label()}:{smode}"
    got = " ".join(str(v) for v in verdicts)
    print(f"  {wanted:38} -> {got}  ({len(schedule.steps)} steps)")
