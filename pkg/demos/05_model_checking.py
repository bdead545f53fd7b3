"""The stable-duration experiment: explored lengths land on the closed form."""

from livenesslab.checker import explore, formula_oracle, safety_scan, \
    competing_rounds_config
from livenesslab.machine import make_config

print("stable duration length by (proposers, acceptors, stable start)\n")
print(f"{'config':>8} | " + " ".join(f"x={x}" for x in range(5)))
print("-" * 44)
for (i, j) in ((2, 3), (2, 4), (3, 3), (3, 4)):
    cfg = make_config(i, j)
    cells = []
    for x in range(0, i + 2):
        run = explore(cfg, x)
        mark = "" if run.stable_length == formula_oracle(i, j, x) else "!"
        cells.append(f"{run.stable_length:3}{mark}")
    print(f"{i}P{j}A".rjust(8) + " | " + " ".join(cells))

print("\nformula: j*x + (j + 2 + ceil((j+1)/2)) while x <= i, then constant")

run = explore(make_config(2, 3), 2)
print(f"\n2P3A at x=2: {run.states_generated} states generated, "
      f"{run.distinct_states} distinct, {run.elapsed_seconds:.3f}s")

rep = safety_scan(competing_rounds_config(2, 3))
print(f"safety scan: {rep.distinct_states} distinct protocol states, "
      f"{len(rep.violations)} violations")
