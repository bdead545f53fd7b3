"""Time, traces, the property AST, and three-valued temporal evaluation.

A trace is a tick-indexed sequence of observation snapshots.  A lasso trace
designates a suffix of its states as a cycle that repeats forever, which
makes ``alw``/``evt`` style properties decidable exactly.  Finite traces
without a cycle get three-valued verdicts: a prefix that neither witnesses
nor refutes a property yields ``Undetermined``.

Evaluation is purely functional over immutable traces and is safe to call
concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union


class TemporalError(Exception):
    pass


class UnboundVariable(TemporalError):
    pass


class DomainUnknown(TemporalError):
    pass


class TimeOutOfRange(TemporalError):
    pass


class LassoInconsistent(TemporalError):
    pass


# ---------------------------------------------------------------------------
# time terms and intervals

Tick = int


@dataclass(frozen=True)
class TLit:
    value: int


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TNow:
    pass


@dataclass(frozen=True)
class TPlus:
    base: "TimeTerm"
    offset: int


TimeTerm = Union[TLit, TVar, TNow, TPlus]


def tplus(base: TimeTerm, offset: int) -> TimeTerm:
    if offset == 0:
        return base
    if isinstance(base, TLit):
        return TLit(base.value + offset)
    if isinstance(base, TPlus):
        return TPlus(base.base, base.offset + offset)
    return TPlus(base, offset)


def eval_time(term: TimeTerm, env: dict, now: int) -> int:
    if isinstance(term, TLit):
        return term.value
    if isinstance(term, TNow):
        return now
    if isinstance(term, TVar):
        try:
            value = env[term.name]
        except KeyError:
            raise UnboundVariable(f"time variable {term.name!r} is not bound")
        if not isinstance(value, int):
            raise DomainUnknown(f"{term.name!r} is bound to a non-tick value")
        return value
    if isinstance(term, TPlus):
        return eval_time(term.base, env, now) + term.offset
    raise TypeError(f"not a time term: {term!r}")


def _is_literal_time(term: TimeTerm) -> bool:
    if isinstance(term, TLit):
        return True
    if isinstance(term, TPlus):
        return _is_literal_time(term.base)
    return False


def _subst_now(term: TimeTerm, repl: TimeTerm) -> TimeTerm:
    if isinstance(term, TNow):
        return repl
    if isinstance(term, TPlus):
        return tplus(_subst_now(term.base, repl), term.offset)
    return term


@dataclass(frozen=True)
class Interval:
    """Time interval with the usual closed/open endpoint notation.

    ``hi is None`` encodes an unbounded (and therefore open) upper end.
    """

    lo: TimeTerm
    hi: Optional[TimeTerm]
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if self.hi is None and self.hi_closed:
            raise ValueError("an unbounded interval must be open above")

    def subst_now(self, repl: TimeTerm) -> "Interval":
        hi = None if self.hi is None else _subst_now(self.hi, repl)
        return Interval(_subst_now(self.lo, repl), hi, self.lo_closed, self.hi_closed)

    def bounds(self, env: dict, now: int) -> tuple[int, Optional[int]]:
        """Resolve to inclusive integer bounds (lo, hi); hi None means inf."""
        lo = eval_time(self.lo, env, now)
        if not self.lo_closed:
            lo += 1
        if self.hi is None:
            return max(lo, 0), None
        hi = eval_time(self.hi, env, now)
        if not self.hi_closed:
            hi -= 1
        return max(lo, 0), hi


def closed(lo: TimeTerm, hi: TimeTerm) -> Interval:
    return Interval(lo, hi, True, True)


def unbounded(lo: TimeTerm, lo_closed: bool = True) -> Interval:
    return Interval(lo, None, lo_closed, False)


# ---------------------------------------------------------------------------
# observation snapshots and traces

_HISTORY_FIELDS = (
    "sent",
    "received",
    "voted",
    "learned",
    "executed",
    "requested",
    "responded",
)


@dataclass(frozen=True)
class ObservationState:
    """One snapshot of everything the property language can observe.

    The seven history sets are cumulative; ``nf_procs``, ``primaries``
    and ``roster`` are per-tick.

    sent/received hold (sender, message, receiver) and
    (receiver, message, sender) triples.  voted holds
    (server, round, slot, value); learned/executed hold
    (server, slot, value); requested (client, value); responded
    (client, value, result).
    """

    nf_procs: frozenset = frozenset()
    primaries: frozenset = frozenset()
    roster: frozenset = frozenset()
    sent: frozenset = frozenset()
    received: frozenset = frozenset()
    voted: frozenset = frozenset()
    learned: frozenset = frozenset()
    executed: frozenset = frozenset()
    requested: frozenset = frozenset()
    responded: frozenset = frozenset()

    def histories(self) -> tuple:
        return tuple(getattr(self, f) for f in _HISTORY_FIELDS)


class Trace:
    """Tick-indexed observation sequence, optionally lasso-shaped.

    ``loop_start`` designates the first state of a cycle running to the end
    of ``states``; the infinite behavior repeats that cycle forever.  The
    cumulative history sets must be identical at ``loop_start`` and at the
    final state, otherwise the wrap-around would shrink a monotone set.
    """

    __slots__ = ("states", "loop_start", "config", "_send_events")

    def __init__(self, states: Iterable[ObservationState], config, loop_start: Optional[int] = None):
        self.states = tuple(states)
        self.config = config
        self.loop_start = loop_start
        self._send_events = None
        if not self.states:
            raise ValueError("a trace needs at least one state")
        prev = self.states[0]
        for st in self.states[1:]:
            for name, before, after in zip(_HISTORY_FIELDS, prev.histories(), st.histories()):
                if not before <= after:
                    raise ValueError(f"history field {name} is not monotone")
            prev = st
        for st in self.states:
            flipped = {(s, m, r) for (r, m, s) in st.received}
            if not flipped <= st.sent:
                raise ValueError("a message was received that was never sent")
        if loop_start is not None:
            if not 0 <= loop_start < len(self.states):
                raise LassoInconsistent("loop_start out of range")
            if self.states[loop_start].histories() != self.states[-1].histories():
                raise LassoInconsistent(
                    "cumulative histories differ between loop start and trace end"
                )

    def __len__(self) -> int:
        return len(self.states)

    @property
    def is_lasso(self) -> bool:
        return self.loop_start is not None

    @property
    def period(self) -> Optional[int]:
        if self.loop_start is None:
            return None
        # the cycle is states[loop_start:], repeated forever
        return len(self.states) - self.loop_start

    def state_at(self, t: int) -> Optional[ObservationState]:
        if t < 0:
            raise TimeOutOfRange(f"tick {t} is negative")
        if t < len(self.states):
            return self.states[t]
        if self.loop_start is None:
            return None
        lam, p = self.loop_start, self.period
        return self.states[lam + (t - lam) % p]

    def horizon(self, lo: int) -> int:
        """Last position that needs checking for an unbounded quantifier at lo.

        On a lasso, values of any forward-looking subexpression repeat with
        the cycle period once past the loop start, so positions up to
        ``max(lo, loop_start) + period - 1`` cover every distinct suffix.
        """
        if self.loop_start is None:
            return len(self.states) - 1
        return max(lo, self.loop_start) + self.period - 1

    def send_events(self):
        """All (sender, message, receiver, first-send-tick) tuples."""
        if self._send_events is None:
            seen = {}
            for t, st in enumerate(self.states):
                for triple in st.sent:
                    if triple not in seen:
                        seen[triple] = t
            self._send_events = tuple(
                sorted((s, m, r, t) for (s, m, r), t in seen.items())
            )
        return self._send_events

    def unrolled(self, extra_cycles: int = 2) -> "Trace":
        """Finite unrolling of a lasso: prefix plus `extra_cycles` more cycles."""
        if self.loop_start is None:
            return self
        lam = self.loop_start
        states = list(self.states)
        for _ in range(extra_cycles):
            states.extend(self.states[lam:])
        return Trace(states, self.config, loop_start=None)

    def stuttered(self) -> "Trace":
        """Close a finite trace into a lasso whose cycle stutters the last state."""
        if self.loop_start is not None:
            return self
        return Trace(self.states, self.config, loop_start=len(self.states) - 1)


# ---------------------------------------------------------------------------
# the property AST

@dataclass(frozen=True)
class TrueE:
    pass


@dataclass(frozen=True)
class FalseE:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: object


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    """Observation predicate; arity picks the single- or multi-value form.

    nf(p) / is_primary(p) / sent(p1,m,p2) / received(p2,m,p1) /
    voted(p,r,v) voted(p,r,s,v) / learned(p,v) learned(p,s,v) /
    executed(p,v) executed(p,s,v) / sent_req(c,v) / received_resp(c,v) /
    received_resp_res(c,v)
    """

    name: str
    args: tuple


@dataclass(frozen=True)
class Not:
    body: "PropertyExpr"


@dataclass(frozen=True)
class And:
    left: "PropertyExpr"
    right: "PropertyExpr"


@dataclass(frozen=True)
class Or:
    left: "PropertyExpr"
    right: "PropertyExpr"


@dataclass(frozen=True)
class Implies:
    left: "PropertyExpr"
    right: "PropertyExpr"


# quantifier domains
@dataclass(frozen=True)
class NamedDomain:
    """clients / quorums / values / rounds are snapshotted from the config;
    servers is read from the per-tick roster (at `at` if given, else now)."""

    name: str
    at: Optional[TimeTerm] = None


@dataclass(frozen=True)
class SlotRange:
    n: int


@dataclass(frozen=True)
class MemberDomain:
    """Members of a set-valued bound variable (a quorum, usually)."""

    var: str


@dataclass(frozen=True)
class TickDomain:
    interval: Interval


Domain = Union[NamedDomain, SlotRange, MemberDomain, TickDomain]


@dataclass(frozen=True)
class Each:
    var: str
    domain: Domain
    body: "PropertyExpr"


@dataclass(frozen=True)
class Some:
    var: str
    domain: Domain
    body: "PropertyExpr"


@dataclass(frozen=True)
class EachSent:
    """Universal quantification over send events `p1.sent m to p2`.

    Binds the three variables and evaluates the body at the send tick.
    ``time_var`` optionally also binds that tick (used by normalize_at).
    """

    sender: str
    message: str
    receiver: str
    body: "PropertyExpr"
    time_var: Optional[str] = None


@dataclass(frozen=True)
class SomeSent:
    sender: str
    message: str
    receiver: str
    body: "PropertyExpr"
    time_var: Optional[str] = None


@dataclass(frozen=True)
class Alw:
    body: "PropertyExpr"


@dataclass(frozen=True)
class Evt:
    body: "PropertyExpr"


@dataclass(frozen=True)
class During:
    body: "PropertyExpr"
    interval: Interval


@dataclass(frozen=True)
class Lasts:
    body: "PropertyExpr"
    duration: int


@dataclass(frozen=True)
class After:
    body: "PropertyExpr"
    duration: int


@dataclass(frozen=True)
class At:
    body: "PropertyExpr"
    time: TimeTerm


@dataclass(frozen=True)
class ServersSet:
    """The roster as a set term, for `servers nf`."""


@dataclass(frozen=True)
class NfSet:
    """`ps nf`: every process in the set is non-faulty."""

    target: Union[Var, ServersSet]


@dataclass(frozen=True)
class ServersEq:
    """`servers at t1 = servers at t2` (roster unchanged)."""

    t1: TimeTerm
    t2: TimeTerm


PropertyExpr = Union[
    TrueE, FalseE, Atom, Not, And, Or, Implies,
    Each, Some, EachSent, SomeSent,
    Alw, Evt, During, Lasts, After, At,
    NfSet, ServersEq,
]


# ---------------------------------------------------------------------------
# verdicts

HOLDS = "holds"
VIOLATED = "violated"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Verdict:
    status: str
    bound: Optional[int] = None

    @property
    def is_holds(self) -> bool:
        return self.status == HOLDS

    @property
    def is_violated(self) -> bool:
        return self.status == VIOLATED

    @property
    def is_undetermined(self) -> bool:
        return self.status == UNDETERMINED

    def __str__(self) -> str:
        if self.status == UNDETERMINED and self.bound is not None:
            return f"Undetermined(bound={self.bound})"
        return self.status.capitalize()


def holds() -> Verdict:
    return Verdict(HOLDS)


def violated() -> Verdict:
    return Verdict(VIOLATED)


# ---------------------------------------------------------------------------
# scope checking

def check_scoped(expr: PropertyExpr, bound: frozenset = frozenset()) -> None:
    """Raise UnboundVariable if any variable occurrence is free."""

    def need(term: Term, env: frozenset):
        if isinstance(term, Var) and term.name not in env:
            raise UnboundVariable(f"variable {term.name!r} is not bound")

    def need_time(term: TimeTerm, env: frozenset):
        if isinstance(term, TVar) and term.name not in env:
            raise UnboundVariable(f"time variable {term.name!r} is not bound")
        if isinstance(term, TPlus):
            need_time(term.base, env)

    def walk(e, env: frozenset):
        if isinstance(e, (TrueE, FalseE, ServersEq)):
            if isinstance(e, ServersEq):
                need_time(e.t1, env)
                need_time(e.t2, env)
            return
        if isinstance(e, Atom):
            for a in e.args:
                need(a, env)
            return
        if isinstance(e, Not):
            walk(e.body, env)
            return
        if isinstance(e, (And, Or, Implies)):
            walk(e.left, env)
            walk(e.right, env)
            return
        if isinstance(e, (Each, Some)):
            dom = e.domain
            if isinstance(dom, MemberDomain) and dom.var not in env:
                raise UnboundVariable(f"set variable {dom.var!r} is not bound")
            if isinstance(dom, TickDomain):
                need_time(dom.interval.lo, env)
                if dom.interval.hi is not None:
                    need_time(dom.interval.hi, env)
            if isinstance(dom, NamedDomain) and dom.at is not None:
                need_time(dom.at, env)
            walk(e.body, env | {e.var})
            return
        if isinstance(e, (EachSent, SomeSent)):
            extra = {e.sender, e.message, e.receiver}
            if e.time_var:
                extra.add(e.time_var)
            walk(e.body, env | extra)
            return
        if isinstance(e, (Alw, Evt)):
            walk(e.body, env)
            return
        if isinstance(e, During):
            need_time(e.interval.lo, env)
            if e.interval.hi is not None:
                need_time(e.interval.hi, env)
            walk(e.body, env)
            return
        if isinstance(e, (Lasts, After)):
            walk(e.body, env)
            return
        if isinstance(e, At):
            need_time(e.time, env)
            walk(e.body, env)
            return
        if isinstance(e, NfSet):
            if isinstance(e.target, Var) and e.target.name not in env:
                raise UnboundVariable(f"set variable {e.target.name!r} is not bound")
            return
        raise TypeError(f"not a property expression: {e!r}")

    walk(expr, bound)


# ---------------------------------------------------------------------------
# evaluation (strong Kleene three-valued logic)

def _k_not(v):
    return None if v is None else (not v)


def _resolve(term: Term, env: dict):
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        try:
            return env[term.name]
        except KeyError:
            raise UnboundVariable(f"variable {term.name!r} is not bound")
    raise TypeError(f"not a term: {term!r}")


def _atom_value(atom: Atom, state: ObservationState, env: dict):
    args = tuple(_resolve(a, env) for a in atom.args)
    name = atom.name
    if name == "nf":
        return args[0] in state.nf_procs
    if name == "is_primary":
        return args[0] in state.primaries
    if name == "sent":
        return (args[0], args[1], args[2]) in state.sent
    if name == "received":
        return (args[0], args[1], args[2]) in state.received
    if name == "voted":
        if len(args) == 4:
            return args in state.voted
        p, r, v = args
        return any(e[0] == p and e[1] == r and e[3] == v for e in state.voted)
    if name == "learned":
        if len(args) == 3:
            return args in state.learned
        p, v = args
        return any(e[0] == p and e[2] == v for e in state.learned)
    if name == "executed":
        if len(args) == 3:
            return args in state.executed
        p, v = args
        return any(e[0] == p and e[2] == v for e in state.executed)
    if name == "sent_req":
        return (args[0], args[1]) in state.requested
    if name == "received_resp":
        c, v = args
        return any(e[0] == c and e[1] == v for e in state.responded)
    if name == "received_resp_res":
        # res(v) is the deterministic result of executing v; traces record it
        # as the value itself
        c, v = args
        return (c, v, v) in state.responded
    raise DomainUnknown(f"unknown atom {name!r}")


class _Evaluator:
    def __init__(self, trace: Trace):
        self.trace = trace
        self.config = trace.config

    def domain_values(self, dom: Domain, env: dict, now: int):
        cfg = self.config
        if isinstance(dom, NamedDomain):
            if dom.name == "servers":
                at = now if dom.at is None else eval_time(dom.at, env, now)
                st = self.trace.state_at(at)
                if st is None:
                    return None  # roster unknown past the end of a finite trace
                return sorted(st.roster)
            try:
                values = getattr(cfg, dom.name)
            except AttributeError:
                raise DomainUnknown(f"domain {dom.name!r} is not in the config")
            if dom.name == "quorums":
                return sorted(values, key=sorted)
            return list(values)
        if isinstance(dom, SlotRange):
            return list(range(1, dom.n + 1))
        if isinstance(dom, MemberDomain):
            try:
                group = env[dom.var]
            except KeyError:
                raise UnboundVariable(f"set variable {dom.var!r} is not bound")
            return sorted(group)
        raise TypeError(f"not an enumerable domain: {dom!r}")

    def tick_positions(self, lo: int, hi: Optional[int]):
        """Positions to enumerate plus whether an unknown tail remains."""
        tr = self.trace
        lo = max(lo, 0)
        if tr.is_lasso:
            cap = tr.horizon(lo)
            top = cap if hi is None else min(hi, cap)
            return range(lo, top + 1), False
        last = len(tr.states) - 1
        if hi is None:
            return range(lo, last + 1), True
        if hi > last:
            return range(lo, last + 1), True
        return range(lo, hi + 1), False

    def eval(self, e: PropertyExpr, env: dict, now: int):
        if isinstance(e, TrueE):
            return True
        if isinstance(e, FalseE):
            return False
        if isinstance(e, Atom):
            st = self.trace.state_at(now)
            if st is None:
                return None
            return _atom_value(e, st, env)
        if isinstance(e, Not):
            return _k_not(self.eval(e.body, env, now))
        if isinstance(e, And):
            left = self.eval(e.left, env, now)
            if left is False:
                return False
            right = self.eval(e.right, env, now)
            if right is False:
                return False
            if left is None or right is None:
                return None
            return True
        if isinstance(e, Or):
            left = self.eval(e.left, env, now)
            if left is True:
                return True
            right = self.eval(e.right, env, now)
            if right is True:
                return True
            if left is None or right is None:
                return None
            return False
        if isinstance(e, Implies):
            left = self.eval(e.left, env, now)
            if left is False:
                return True
            right = self.eval(e.right, env, now)
            if right is True:
                return True
            if left is None or right is None:
                return None
            return right
        if isinstance(e, (Each, Some)):
            universal = isinstance(e, Each)
            if isinstance(e.domain, TickDomain):
                lo, hi = e.domain.interval.bounds(env, now)
                positions, tail = self.tick_positions(lo, hi)
                result = True if universal else False
                for t in positions:
                    v = self.eval(e.body, {**env, e.var: t}, now)
                    if universal and v is False:
                        return False
                    if not universal and v is True:
                        return True
                    if v is None:
                        result = None
                if tail:
                    result = None
                return result
            members = self.domain_values(e.domain, env, now)
            if members is None:
                return None
            result = True if universal else False
            for m in members:
                v = self.eval(e.body, {**env, e.var: m}, now)
                if universal and v is False:
                    return False
                if not universal and v is True:
                    return True
                if v is None:
                    result = None
            return result
        if isinstance(e, (EachSent, SomeSent)):
            universal = isinstance(e, EachSent)
            events = self.trace.send_events()
            # on a finite non-lasso trace more messages may still be sent,
            # so a universal cannot be confirmed nor an existential refuted
            open_ended = not self.trace.is_lasso
            result = True if universal else False
            for (s, m, r, t) in events:
                sub = {**env, e.sender: s, e.message: m, e.receiver: r}
                if e.time_var:
                    sub[e.time_var] = t
                v = self.eval(e.body, sub, t)
                if universal and v is False:
                    return False
                if not universal and v is True:
                    return True
                if v is None:
                    result = None
            if open_ended:
                result = None
            return result
        if isinstance(e, Alw):
            positions, tail = self.tick_positions(now, None)
            result = True
            for t in positions:
                v = self.eval(e.body, env, t)
                if v is False:
                    return False
                if v is None:
                    result = None
            return None if tail else result
        if isinstance(e, Evt):
            positions, tail = self.tick_positions(now, None)
            result = False
            for t in positions:
                v = self.eval(e.body, env, t)
                if v is True:
                    return True
                if v is None:
                    result = None
            return None if tail else result
        if isinstance(e, During):
            lo, hi = e.interval.bounds(env, now)
            positions, tail = self.tick_positions(lo, hi)
            result = True
            for t in positions:
                v = self.eval(e.body, env, t)
                if v is False:
                    return False
                if v is None:
                    result = None
            if tail:
                result = None
            return result
        if isinstance(e, Lasts):
            return self.eval(During(e.body, closed(TLit(now), TLit(now + e.duration))), env, now)
        if isinstance(e, After):
            return self.eval(During(e.body, Interval(TLit(now + e.duration), None, False, False)), env, now)
        if isinstance(e, At):
            t = eval_time(e.time, env, now)
            if t < 0:
                raise TimeOutOfRange(f"time {t} is before the start of the trace")
            if (not self.trace.is_lasso and t >= len(self.trace.states)
                    and _is_literal_time(e.time)):
                raise TimeOutOfRange(
                    f"explicit time {t} lies beyond this finite trace")
            return self.eval(e.body, env, t)
        if isinstance(e, NfSet):
            st = self.trace.state_at(now)
            if st is None:
                return None
            if isinstance(e.target, ServersSet):
                group = st.roster
            else:
                group = _resolve(e.target, env)
            return all(p in st.nf_procs for p in group)
        if isinstance(e, ServersEq):
            t1 = eval_time(e.t1, env, now)
            t2 = eval_time(e.t2, env, now)
            s1 = self.trace.state_at(t1)
            s2 = self.trace.state_at(t2)
            if s1 is None or s2 is None:
                return None
            return s1.roster == s2.roster
        raise TypeError(f"not a property expression: {e!r}")


def eval_expr(expr: PropertyExpr, trace: Trace, now: Tick = 0) -> Verdict:
    """Evaluate a property on a trace starting from tick ``now``.

    Lasso traces give exact Holds/Violated answers for the catalog
    properties; finite traces may answer Undetermined with the trace length
    as the bound up to which the prefix was checked.
    """
    if not 0 <= now < len(trace.states):
        raise TimeOutOfRange(f"now={now} outside trace of length {len(trace.states)}")
    check_scoped(expr)
    value = _Evaluator(trace).eval(expr, {}, now)
    if value is True:
        return holds()
    if value is False:
        return violated()
    return Verdict(UNDETERMINED, bound=len(trace.states))


# ---------------------------------------------------------------------------
# normalize_at and desugar

def _used_names(expr: PropertyExpr) -> set:
    names = set()

    def walk(e):
        if isinstance(e, (Each, Some)):
            names.add(e.var)
            walk(e.body)
        elif isinstance(e, (EachSent, SomeSent)):
            names.update({e.sender, e.message, e.receiver})
            if e.time_var:
                names.add(e.time_var)
            walk(e.body)
        elif isinstance(e, Not):
            walk(e.body)
        elif isinstance(e, (And, Or, Implies)):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, (Alw, Evt, During, Lasts, After, At)):
            walk(e.body)

    walk(expr)
    return names


class _FreshNames:
    def __init__(self, used: set, prefix: str = "t"):
        self.used = set(used)
        self.prefix = prefix
        self.counter = itertools.count(1)

    def next(self) -> str:
        while True:
            name = f"{self.prefix}{next(self.counter)}"
            if name not in self.used:
                self.used.add(name)
                return name


def normalize_at(expr: PropertyExpr) -> PropertyExpr:
    """Push time annotations inward until every atom carries an explicit time.

    Temporal operators become quantifiers over tick intervals; the result
    evaluates identically on every trace.
    """
    fresh = _FreshNames(_used_names(expr))

    def walk(e: PropertyExpr, tt: TimeTerm) -> PropertyExpr:
        if isinstance(e, (TrueE, FalseE)):
            return e
        if isinstance(e, (Atom, NfSet)):
            if isinstance(e, NfSet):
                return At(e, tt)
            return At(e, tt)
        if isinstance(e, ServersEq):
            return ServersEq(_subst_now(e.t1, tt), _subst_now(e.t2, tt))
        if isinstance(e, Not):
            return Not(walk(e.body, tt))
        if isinstance(e, And):
            return And(walk(e.left, tt), walk(e.right, tt))
        if isinstance(e, Or):
            return Or(walk(e.left, tt), walk(e.right, tt))
        if isinstance(e, Implies):
            return Implies(walk(e.left, tt), walk(e.right, tt))
        if isinstance(e, (Each, Some)):
            dom = e.domain
            if isinstance(dom, NamedDomain) and dom.name == "servers" and dom.at is None:
                dom = NamedDomain("servers", at=tt)
            elif isinstance(dom, TickDomain):
                dom = TickDomain(dom.interval.subst_now(tt))
            cls = Each if isinstance(e, Each) else Some
            return cls(e.var, dom, walk(e.body, tt))
        if isinstance(e, (EachSent, SomeSent)):
            tv = e.time_var or fresh.next()
            cls = EachSent if isinstance(e, EachSent) else SomeSent
            return cls(e.sender, e.message, e.receiver, walk(e.body, TVar(tv)), tv)
        if isinstance(e, Alw):
            tv = fresh.next()
            return Each(tv, TickDomain(unbounded(tt)), walk(e.body, TVar(tv)))
        if isinstance(e, Evt):
            tv = fresh.next()
            return Some(tv, TickDomain(unbounded(tt)), walk(e.body, TVar(tv)))
        if isinstance(e, During):
            tv = fresh.next()
            ivl = e.interval.subst_now(tt)
            return Each(tv, TickDomain(ivl), walk(e.body, TVar(tv)))
        if isinstance(e, Lasts):
            tv = fresh.next()
            ivl = Interval(tt, tplus(tt, e.duration), True, True)
            return Each(tv, TickDomain(ivl), walk(e.body, TVar(tv)))
        if isinstance(e, After):
            tv = fresh.next()
            ivl = Interval(tplus(tt, e.duration), None, False, False)
            return Each(tv, TickDomain(ivl), walk(e.body, TVar(tv)))
        if isinstance(e, At):
            return walk(e.body, _subst_now(e.time, tt))
        raise TypeError(f"not a property expression: {e!r}")

    return walk(expr, TNow())


def desugar(expr: PropertyExpr) -> PropertyExpr:
    """Rewrite During/Lasts/After/NfSet into each-quantified at-forms."""
    fresh = _FreshNames(_used_names(expr))

    def walk(e: PropertyExpr) -> PropertyExpr:
        if isinstance(e, (TrueE, FalseE, Atom, ServersEq)):
            return e
        if isinstance(e, Not):
            return Not(walk(e.body))
        if isinstance(e, And):
            return And(walk(e.left), walk(e.right))
        if isinstance(e, Or):
            return Or(walk(e.left), walk(e.right))
        if isinstance(e, Implies):
            return Implies(walk(e.left), walk(e.right))
        if isinstance(e, Each):
            return Each(e.var, e.domain, walk(e.body))
        if isinstance(e, Some):
            return Some(e.var, e.domain, walk(e.body))
        if isinstance(e, EachSent):
            return EachSent(e.sender, e.message, e.receiver, walk(e.body), e.time_var)
        if isinstance(e, SomeSent):
            return SomeSent(e.sender, e.message, e.receiver, walk(e.body), e.time_var)
        if isinstance(e, Alw):
            return Alw(walk(e.body))
        if isinstance(e, Evt):
            return Evt(walk(e.body))
        if isinstance(e, During):
            tv = fresh.next()
            return Each(tv, TickDomain(e.interval), At(walk(e.body), TVar(tv)))
        if isinstance(e, Lasts):
            ivl = Interval(TNow(), tplus(TNow(), e.duration), True, True)
            return walk(During(e.body, ivl))
        if isinstance(e, After):
            ivl = Interval(tplus(TNow(), e.duration), None, False, False)
            return walk(During(e.body, ivl))
        if isinstance(e, At):
            return At(walk(e.body), e.time)
        if isinstance(e, NfSet):
            tv = fresh.next()
            if isinstance(e.target, ServersSet):
                dom = NamedDomain("servers")
            else:
                dom = MemberDomain(e.target.name)
            return Each(tv, dom, Atom("nf", (Var(tv),)))
        raise TypeError(f"not a property expression: {e!r}")

    return walk(expr)
