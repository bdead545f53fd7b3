"""The assumption/assertion catalog and the implication hierarchy."""

from livenesslab.catalog import catalog_entries, hierarchy_edges
from livenesslab.hierarchy import (
    check_edges, incomparability_report, make_corpus, separating_witness,
)
from livenesslab.catalog import ASSERTION_SINGLE, SERVER, CatalogId

print("== the catalog ==")
for cid, params, text in catalog_entries():
    tag = f"{cid.name}({','.join(params)})" if params else cid.name
    print(f"  {cid.kind:16} {tag:20} {text}")

solid, dashed = hierarchy_edges()
print(f"\n== hierarchy: {len(solid)} solid edges, {len(dashed)} dashed ==")
for s, w in solid:
    print(f"  {s.name:14} => {w.name}")
print(f"  {dashed[0][0].name:14} -> {dashed[0][1].name}   (may hold; never checked)")

print("\n== checking every edge on a 1500-lasso corpus ==")
corpus = make_corpus(1500, seed=7)
for rep in check_edges(corpus):
    s, w = rep.edge
    status = "ok" if not rep.violations else f"{len(rep.violations)} VIOLATIONS"
    print(f"  {s.label():>22} => {w.label():<18} {status}")

print("\n== strictness: the weaker side does not give back the stronger ==")
rot = separating_witness(CatalogId(SERVER, "Alw-Q"), CatalogId(SERVER, "Q-Alw"))
print(f"  rotating-quorum lasso: {len(rot.states)} states, cycle at {rot.loop_start}")
raft = separating_witness(CatalogId(ASSERTION_SINGLE, "Each-Vote"),
                          CatalogId(ASSERTION_SINGLE, "Some-Learn"))
print(f"  term-flip lasso: Each-Vote holds, Some-Learn fails, "
      f"{len(raft.states)} states")

print("\n== the two incomparable pairs ==")
for a, b, _w1, _w2 in incomparability_report():
    print(f"  {a.label()} and {b.label()}: a witness in each direction")
