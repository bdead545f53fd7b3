"""Tour of the property language: parsing, printing, and evaluation."""

from livenesslab import eval_expr, parse, print_expr
from livenesslab.machine import SystemConfig
from livenesslab.scenarios import TraceBuilder

cfg = SystemConfig(proposers=("s1", "s2"), acceptors=("s1", "s2", "s3"),
                   clients=("c1",), values=("v1",), rounds=(1, 2))

# A short lasso: one message makes it across, then a node flaps forever.
b = TraceBuilder(cfg)
b.primary("s1").commit()
b.send("s1", "hello", "s2").commit()
b.deliver("s1", "hello", "s2").commit()
b.crash("s3").commit()
b.recover("s3").commit()
trace = b.build(loop_start=3)

print("trace:", len(trace.states), "states, cycle starts at", trace.loop_start)

for text in [
    "evt 's2'.received 'hello' from 's1'",
    "each p1.sent m to p2 has evt p2.received m from p1",
    "evt alw some q in quorums has q nf",
    "evt some q in quorums has alw q nf",
    "alw servers nf",
]:
    expr = parse(text)
    print(f"{print_expr(expr):>55}  ->  {eval_expr(expr, trace)}")

# durations: the flap has period two, so nothing stays up three ticks
flap_free = parse("evt ((servers nf) lasts D)", {"D": 3})
print(f"{print_expr(flap_free):>55}  ->  {eval_expr(flap_free, trace)}")

# finite prefixes answer three-valued
from livenesslab.temporal import Trace

prefix = Trace(trace.states[:2], cfg)
evt = parse("evt 's2'.received 'hello' from 's1'")
print("on a 2-state prefix:", eval_expr(evt, prefix))
