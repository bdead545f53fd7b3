"""Explicit-state checking: stable-duration exploration, the closed-form
oracle it must reproduce, an exhaustive safety scan, and a bounded search
for liveness counterexample lassos.

The stable-duration explorer counts one tick per action and constrains
leader elections to the unstable window: an election (adopting the next
round and broadcasting its prepare, one action) may happen only while
``tick <= stable_start``, drawing from a pool of one competing round per
proposer plus the stabilizing round.  A superseded round keeps collecting
promises only until a quorum has answered it; only the newest round sends
its accept or gathers votes, and nobody promises below a round that already
reached the accept phase.  This granularity is what makes the measured
stable duration lengths land exactly on the closed form.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import machine as mc
from .catalog import CatalogId, build
from .machine import SystemConfig
from .temporal import Trace, eval_expr


class CheckerError(Exception):
    pass


class BudgetExceeded(CheckerError):
    def __init__(self, what: str, limit: int):
        self.what = what
        self.limit = limit
        super().__init__(f"exceeded the {what} budget of {limit}")


class NoConsensusPath(CheckerError):
    pass


def formula_oracle(i: int, j: int, x: int) -> int:
    """Closed form for the stable duration length.

    j*x + (j + 2 + ceil((j+1)/2)) while x <= i, constant afterwards: the
    parenthesized term is the length of an uncontended round (prepare
    broadcast, every acceptor's promise, the accept broadcast, and a quorum
    of votes), and each tick of instability lets one more round compete at
    a cost of j actions.
    """
    if i < 1 or j < 1 or x < 0:
        raise ValueError("need i >= 1, j >= 1, x >= 0")
    base = j + 2 + (j + 2) // 2
    return j * min(x, i) + base


@dataclass(frozen=True)
class CheckRun:
    config: SystemConfig
    stable_start: int
    stable_length: int
    states_generated: int
    distinct_states: int
    elapsed_seconds: float

    def __post_init__(self):
        if self.stable_length < self.stable_start:
            raise ValueError("stable_length below stable_start")
        if self.distinct_states > self.states_generated:
            raise ValueError("distinct states exceed generated states")


def competing_rounds_config(n_proposers: int, n_acceptors: int,
                            n_clients: int = 1) -> SystemConfig:
    """Config whose round pool matches the stable-duration model: one
    competing round per proposer plus one re-election."""
    proposers = tuple(f"p{k + 1}" for k in range(n_proposers))
    rounds = tuple((1, p) for p in proposers) + ((2, proposers[0]),)
    return SystemConfig(
        proposers=proposers,
        acceptors=tuple(f"a{k + 1}" for k in range(n_acceptors)),
        clients=tuple(f"c{k + 1}" for k in range(n_clients)),
        rounds=tuple(sorted(rounds)),
    )


def _quorum_masks(config: SystemConfig) -> tuple:
    index = {a: k for k, a in enumerate(config.acceptors)}
    masks = []
    for q in config.quorums:
        mask = 0
        for a in q:
            mask |= 1 << index[a]
        masks.append(mask)
    return tuple(sorted(masks))


def explore(config: SystemConfig, stable_start: int,
            max_states: int = 5_000_000, tick_slack: int = 8) -> CheckRun:
    """Breadth-first exploration of every behavior under the stable-start
    discipline; the stable duration length is the latest tick at which the
    first same-round quorum of votes can appear.

    The sought quantity is a maximum over finite-depth behaviors, so the
    walk is capped at the closed form plus `tick_slack` ticks; hitting the
    cap means the calibration is broken and raises rather than truncating
    silently.
    """
    if stable_start < 0:
        raise ValueError("stable_start must be non-negative")
    t0 = time.perf_counter()
    i = len(config.proposers)
    j = len(config.acceptors)
    x = stable_start
    pool = i + 1
    qmasks = _quorum_masks(config)
    tick_cap = formula_oracle(i, j, x) + tick_slack

    # state: (tick, rounds_started, maxbal per acceptor, promise bitmask,
    #         accept bitmask, vote bitmask); round k occupies bit a*pool+k-1
    init = (0, 0, (0,) * j, 0, 0, 0)

    def per_round_count(mask: int, nb: int) -> list:
        counts = [0] * (nb + 1)
        while mask:
            low = mask & -mask
            idx = low.bit_length() - 1
            counts[idx % pool + 1] += 1
            mask ^= low
        return counts

    def voters(vmask: int, b: int) -> int:
        out = 0
        for a in range(j):
            if vmask >> (a * pool + b - 1) & 1:
                out |= 1 << a
        return out

    def reaches_consensus(vmask: int, nb: int) -> bool:
        for b in range(1, nb + 1):
            got = voters(vmask, b)
            if any(q & got == q for q in qmasks):
                return True
        return False

    quorum_size = min(bin(q).count("1") for q in qmasks)

    def successors(st):
        tick, nb, maxbal, pmask, amask, vmask = st
        out = []
        if tick <= x and nb < pool:
            out.append((tick + 1, nb + 1, maxbal, pmask, amask, vmask))
        pc = per_round_count(pmask, nb)
        hi_accepted = 0
        for b in range(1, nb + 1):
            if amask >> (b - 1) & 1:
                hi_accepted = b
        for b in range(1, nb + 1):
            if b != nb and pc[b] >= quorum_size:
                continue
            if b < hi_accepted:
                continue
            for a in range(j):
                if maxbal[a] < b:
                    nm = maxbal[:a] + (b,) + maxbal[a + 1:]
                    out.append((tick + 1, nb, nm, pmask | (1 << (a * pool + b - 1)),
                                amask, vmask))
        b = nb
        if b >= 1 and not (amask >> (b - 1) & 1):
            got = 0
            for a in range(j):
                if pmask >> (a * pool + b - 1) & 1:
                    got |= 1 << a
            if any(q & got == q for q in qmasks):
                out.append((tick + 1, nb, maxbal, pmask, amask | (1 << (b - 1)), vmask))
        if b >= 1 and (amask >> (b - 1) & 1):
            for a in range(j):
                if maxbal[a] <= b and not (vmask >> (a * pool + b - 1) & 1):
                    nm = maxbal[:a] + (b,) + maxbal[a + 1:]
                    out.append((tick + 1, nb, nm, pmask, amask,
                                vmask | (1 << (a * pool + b - 1))))
        return out

    seen = {init}
    frontier = deque([init])
    generated = 0
    best: Optional[int] = None
    while frontier:
        st = frontier.popleft()
        succ = successors(st)
        generated += len(succ)
        if not succ and not reaches_consensus(st[5], st[1]):
            raise NoConsensusPath(f"stuck without consensus at tick {st[0]}")
        for s in succ:
            if s in seen:
                continue
            if len(seen) >= max_states:
                raise BudgetExceeded("state", max_states)
            if s[0] > tick_cap:
                raise BudgetExceeded("tick", tick_cap)
            seen.add(s)
            if reaches_consensus(s[5], s[1]):
                if best is None or s[0] > best:
                    best = s[0]
            else:
                frontier.append(s)
    if best is None:
        raise NoConsensusPath("no behavior reached a vote quorum")
    return CheckRun(
        config=config,
        stable_start=stable_start,
        stable_length=best,
        states_generated=generated,
        distinct_states=len(seen),
        elapsed_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# exhaustive safety scan

@dataclass(frozen=True)
class SafetyReport:
    config: SystemConfig
    distinct_states: int
    states_generated: int
    violations: tuple


def safety_scan(config: SystemConfig, max_states: int = 2_000_000) -> SafetyReport:
    """Exhaustively explore the protocol state space (election timing
    unconstrained, promises/accepts/votes under plain Paxos rules) and check
    on every state that at most one value gathers a same-round vote quorum
    per slot and that learned values are quorum-backed."""
    j = len(config.acceptors)
    rounds = tuple(sorted(config.rounds))
    pool = len(rounds)
    owner_value = {}
    for k, rnd in enumerate(rounds):
        p = rnd[1] if isinstance(rnd, tuple) else config.proposers[k % len(config.proposers)]
        idx = config.proposers.index(p) if p in config.proposers else 0
        owner_value[k + 1] = config.values[idx % len(config.values)]
    qmasks = _quorum_masks(config)

    # state: (rounds started, maxbal per acceptor, promise (a,b) mask,
    #         accepted value per round, vote (a,b) mask, learned value mask)
    init = (0, (0,) * j, 0, (), 0, 0)
    value_index = {v: k for k, v in enumerate(config.values)}

    def report(vmask: int, a: int, b: int) -> int:
        """Latest vote of acceptor a below round b; votes below b can only
        precede a's promise of b, so this is exactly the 1b report."""
        for b0 in range(b - 1, 0, -1):
            if vmask >> (a * pool + b0 - 1) & 1:
                return b0
        return 0

    def successors(st):
        nb, maxbal, pmask, accepted, vmask, learned = st
        out = []
        if nb < pool:
            out.append((nb + 1, maxbal, pmask, accepted + (None,), vmask, learned))
        for b in range(1, nb + 1):
            for a in range(j):
                if maxbal[a] < b:
                    nm = maxbal[:a] + (b,) + maxbal[a + 1:]
                    out.append((nb, nm, pmask | (1 << (a * pool + b - 1)),
                                accepted, vmask, learned))
        for b in range(1, nb + 1):
            if accepted[b - 1] is not None:
                continue
            got = 0
            for a in range(j):
                if pmask >> (a * pool + b - 1) & 1:
                    got |= 1 << a
            if any(q & got == q for q in qmasks):
                prior = 0
                for a in range(j):
                    if pmask >> (a * pool + b - 1) & 1:
                        prior = max(prior, report(vmask, a, b))
                value = accepted[prior - 1] if prior else owner_value[b]
                acc = accepted[:b - 1] + (value,) + accepted[b:]
                out.append((nb, maxbal, pmask, acc, vmask, learned))
        for b in range(1, nb + 1):
            if accepted[b - 1] is None:
                continue
            for a in range(j):
                if maxbal[a] <= b and not (vmask >> (a * pool + b - 1) & 1):
                    nm = maxbal[:a] + (b,) + maxbal[a + 1:]
                    out.append((nb, nm, pmask, accepted,
                                vmask | (1 << (a * pool + b - 1)), learned))
        chosen = chosen_values(st)
        for v in chosen:
            bit = 1 << value_index[v]
            if not learned & bit:
                out.append((nb, maxbal, pmask, accepted, vmask, learned | bit))
        return out

    def chosen_values(st):
        nb, maxbal, pmask, accepted, vmask, learned = st
        got = set()
        for b in range(1, nb + 1):
            if accepted[b - 1] is None:
                continue
            mask = 0
            for a in range(j):
                if vmask >> (a * pool + b - 1) & 1:
                    mask |= 1 << a
            if any(q & mask == q for q in qmasks):
                got.add(accepted[b - 1])
        return got

    def check(st) -> Optional[str]:
        chosen = chosen_values(st)
        if len(chosen) > 1:
            return f"values {sorted(chosen)} each gathered a vote quorum"
        learned = st[5]
        for v, k in value_index.items():
            if learned >> k & 1 and v not in chosen:
                return f"learned value {v!r} lacks a vote quorum"
        return None

    seen = {init}
    frontier = deque([init])
    generated = 0
    violations = []
    while frontier:
        st = frontier.popleft()
        for s in successors(st):
            generated += 1
            if s in seen:
                continue
            if len(seen) >= max_states:
                raise BudgetExceeded("state", max_states)
            seen.add(s)
            bad = check(s)
            if bad:
                violations.append(bad)
            frontier.append(s)
    return SafetyReport(config, len(seen), generated, tuple(violations))


# ---------------------------------------------------------------------------
# bounded counterexample-lasso search

@dataclass(frozen=True)
class LassoCheckResult:
    outcome: str                      # "holds" | "counterexample" | "undetermined"
    trace: Optional[Trace] = None
    states_explored: int = 0
    bound: Optional[int] = None

    @property
    def is_counterexample(self) -> bool:
        return self.outcome == "counterexample"


class _Skeleton:
    """Protocol-step skeleton used by the lasso search.

    Tracks rounds, promises, accepts, votes and learns with messages read
    from a pool, leaving delivery interleavings out of the state; rounds
    start in ascending order.  Each path through the skeleton is realized
    as a concrete machine run when a closure is attempted.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        self.rounds = tuple(sorted(config.rounds))
        self.j = len(config.acceptors)
        self.pool = len(self.rounds)
        self.qmasks = _quorum_masks(config)
        self.owner = {}
        for k, rnd in enumerate(self.rounds):
            p = rnd[1] if isinstance(rnd, tuple) and rnd[1] in config.proposers \
                else config.proposers[k % len(config.proposers)]
            self.owner[k + 1] = p

    def initial(self):
        # (rounds started, maxbal, promise (a,b) mask, accepted values,
        #  vote (a,b) mask, learned (proposer, value) set)
        return (0, (0,) * self.j, 0, (), 0, frozenset())

    def current_round_of(self, st, p) -> int:
        nb = st[0]
        mine = [b for b in range(1, nb + 1) if self.owner[b] == p]
        return mine[-1] if mine else 0

    def promisers(self, st, b) -> int:
        mask = 0
        for a in range(self.j):
            if st[2] >> (a * self.pool + b - 1) & 1:
                mask |= 1 << a
        return mask

    def voters(self, st, b) -> int:
        mask = 0
        for a in range(self.j):
            if st[4] >> (a * self.pool + b - 1) & 1:
                mask |= 1 << a
        return mask

    def has_quorum(self, mask: int) -> bool:
        return any(q & mask == q for q in self.qmasks)

    def accept_value(self, st, b):
        nb, maxbal, pmask, accepted, vmask, learned = st
        prior = 0
        for a in range(self.j):
            if pmask >> (a * self.pool + b - 1) & 1:
                for b0 in range(b - 1, prior, -1):
                    if vmask >> (a * self.pool + b0 - 1) & 1:
                        prior = max(prior, b0)
                        break
        if prior:
            return accepted[prior - 1]
        p = self.owner[b]
        idx = self.config.proposers.index(p)
        return self.config.values[idx % len(self.config.values)]

    def moves(self, st):
        nb, maxbal, pmask, accepted, vmask, learned = st
        out = []
        if nb < self.pool:
            out.append((("elect", nb + 1),
                        (nb + 1, maxbal, pmask, accepted + (None,), vmask, learned)))
        for b in range(1, nb + 1):
            for a in range(self.j):
                if maxbal[a] < b:
                    nm = maxbal[:a] + (b,) + maxbal[a + 1:]
                    out.append((("promise", a, b),
                                (nb, nm, pmask | (1 << (a * self.pool + b - 1)),
                                 accepted, vmask, learned)))
        for b in range(1, nb + 1):
            if accepted[b - 1] is not None:
                continue
            if self.owner[b] is None or self.current_round_of(st, self.owner[b]) != b:
                continue
            if self.has_quorum(self.promisers(st, b)):
                value = self.accept_value(st, b)
                acc = accepted[:b - 1] + (value,) + accepted[b:]
                out.append((("accept", b),
                            (nb, maxbal, pmask, acc, vmask, learned)))
        for b in range(1, nb + 1):
            if accepted[b - 1] is None:
                continue
            for a in range(self.j):
                if maxbal[a] <= b and not (vmask >> (a * self.pool + b - 1) & 1):
                    nm = maxbal[:a] + (b,) + maxbal[a + 1:]
                    out.append((("vote", a, b),
                                (nb, nm, pmask, accepted,
                                 vmask | (1 << (a * self.pool + b - 1)), learned)))
        for b in range(1, nb + 1):
            if accepted[b - 1] is None or not self.has_quorum(self.voters(st, b)):
                continue
            for p in self.config.proposers:
                if (p, accepted[b - 1]) not in learned:
                    out.append((("learn", p, b, accepted[b - 1]),
                                (nb, maxbal, pmask, accepted, vmask,
                                 learned | {(p, accepted[b - 1])})))
        return out

    def owing_processes(self, st):
        """Who still owes a protocol step, split by role.

        A non-faulty process must eventually answer prepares and accepts
        addressed to it, propose once a quorum has answered, and learn once
        a quorum has voted; Raw-link searches skip this entirely because
        lost messages excuse everything message-dependent.
        """
        nb, maxbal, pmask, accepted, vmask, learned = st
        acceptors = set()
        for b in range(1, nb + 1):
            for a in range(self.j):
                fresh_prepare = maxbal[a] < b and not (pmask >> (a * self.pool + b - 1) & 1)
                votable = (accepted[b - 1] is not None and maxbal[a] <= b
                           and not (vmask >> (a * self.pool + b - 1) & 1))
                if fresh_prepare or votable:
                    acceptors.add(self.config.acceptors[a])
        proposers = set()
        for p in self.config.proposers:
            b = self.current_round_of(st, p)
            if b and accepted[b - 1] is None and self.has_quorum(self.promisers(st, b)):
                proposers.add(p)
        for b in range(1, nb + 1):
            if accepted[b - 1] is not None and self.has_quorum(self.voters(st, b)):
                for p in self.config.proposers:
                    if (p, accepted[b - 1]) not in learned:
                        proposers.add(p)
        return acceptors, proposers


def _realize(config: SystemConfig, skeleton: _Skeleton, moves, drop_rest: bool,
             crash_set) -> Optional[list]:
    """Replay a skeleton path through the machine and close it out.

    Promise and vote steps carry their own receipt tick; an accept first
    receives the promise replies it relies on, a learn first receives the
    matching vote reports.  At the end every leftover message is received
    (or dropped, for a Raw-link search), the owing processes crash, and the
    trace stutters forever.
    """
    st = mc.init(config)
    states = [st]

    def do(action):
        nonlocal st
        st = mc.apply_action(st, action, check=False)
        states.append(st)

    def pending_named(kind, rnd, receiver, sender=None):
        for m in sorted(st.pending):
            if m.kind == kind and m.round == rnd and m.receiver == receiver:
                if sender is None or m.sender == sender:
                    return m
        return None

    shadow = skeleton.initial()
    for name, nxt in moves:
        if name[0] == "elect":
            do(mc.StartLeaderElection(skeleton.owner[name[1]]))
        elif name[0] == "promise":
            _op, a, b = name
            acc = config.acceptors[a]
            msg = pending_named("1a", skeleton.rounds[b - 1], acc)
            if msg is None:
                return None
            do(mc.AcceptorPromise(acc, msg))
        elif name[0] == "accept":
            b = name[1]
            p = skeleton.owner[b]
            rnd = skeleton.rounds[b - 1]
            mask = skeleton.promisers(shadow, b)
            for a in range(skeleton.j):
                if mask >> a & 1:
                    msg = pending_named("1b", rnd, p, config.acceptors[a])
                    if msg is not None:
                        do(mc.DeliverMessage(msg))
            do(mc.ProposerSendAccept(p))
        elif name[0] == "vote":
            _op, a, b = name
            acc = config.acceptors[a]
            msg = pending_named("2a", skeleton.rounds[b - 1], acc)
            if msg is None:
                return None
            do(mc.AcceptorVote(acc, msg))
        elif name[0] == "learn":
            _op, p, b, value = name
            rnd = skeleton.rounds[b - 1]
            for a_name in config.acceptors:
                msg = pending_named("2b", rnd, p, a_name)
                if msg is not None:
                    do(mc.DeliverMessage(msg))
            do(mc.Learn(p, rnd, value))
        shadow = nxt

    if drop_rest:
        while st.pending:
            do(mc.DropMessage(sorted(st.pending)[0]))
    else:
        # receive everything that is still in flight; replies and stale
        # rounds are plain receipts, so this cannot cascade
        progress = True
        while progress:
            progress = False
            for m in sorted(st.pending):
                acts = mc.enabled(st)
                if mc.DeliverMessage(m) in acts:
                    do(mc.DeliverMessage(m))
                    progress = True
        for p in sorted(crash_set):
            do(mc.Crash(p))
        if st.pending:
            return None  # an owed reply remains undeliverable; not closable
    return states


def check_liveness_lasso(config: SystemConfig, link: CatalogId,
                         server: CatalogId, assertion: CatalogId,
                         max_states: int = 500_000) -> LassoCheckResult:
    """Search for a lasso admissible under the link and server assumptions
    on which the assertion fails.

    An assumption admits a trace when the property holds on it; Raw admits
    every trace (it promises nothing about delivery).  Candidates close a
    skeleton path with a stuttering cycle once nothing more is owed: under
    a delivering link this means every prepare/accept on the table was
    answered and at most the proposers that still owe proposals or learns
    crash; under Raw the leftovers are simply dropped.  Every candidate is
    re-checked by evaluating all three properties on the realized trace.
    Exhausting the skeleton space without a candidate reports Holds; an
    exploration cut by the state budget reports Undetermined.
    """
    link_expr = build(link) if link.name != "Raw" else None
    server_expr = build(server)
    assertion_expr = build(assertion)
    raw_link = link.name == "Raw"
    skel = _Skeleton(config)

    def violation_plausible(state) -> bool:
        """Cheap necessary condition for the assertion to fail on the
        realized stutter-lasso, read off the skeleton facts."""
        nb, _maxbal, _pmask, accepted, vmask, learned = state
        name = assertion.name
        if name == "Each-Vote":
            return not any(
                accepted[b - 1] is not None and skel.has_quorum(skel.voters(state, b))
                for b in range(1, nb + 1))
        if name == "Some-Learn":
            return not learned
        if name == "Each-Learn" and assertion.kind == "assertion-single":
            # learners are proposers while quorums range over acceptors, so
            # a machine trace can never satisfy it; every closure qualifies
            return True
        return True

    def crashes_admissible(state, crash) -> bool:
        """Exact precheck: would a cycle with `crash` down forever already
        defeat the server assumption?  The crashed set never recovers and
        only the top round's owner is ever flagged primary."""
        if not crash:
            return True
        name = server.name
        if name == "Alw":
            return False
        alive = set(config.acceptors) - crash
        if not any(q <= alive for q in config.quorums):
            return False
        if name in ("P-Alw-Q", "PQ-Alw", "PQ-Dur", "PQ-Extra-Dur"):
            claimant = skel.owner[state[0]] if state[0] else None
            if claimant in crash:
                return False
        return True

    def try_closure(path, state) -> Optional[Trace]:
        if state[0] == 0:
            return None  # the system never even tried; not an adversarial run
        acceptors_owing, proposers_owing = skel.owing_processes(state)
        if raw_link:
            crash = set()
        else:
            if acceptors_owing:
                return None  # their pending messages could never be received
            crash = proposers_owing
        if not crashes_admissible(state, crash):
            return None
        states = _realize(config, skel, path, raw_link, crash)
        if states is None:
            return None
        trace = mc.trace_of(states, loop_start=len(states) - 1)
        if not eval_expr(assertion_expr, trace).is_violated:
            return None
        if not eval_expr(server_expr, trace).is_holds:
            return None
        if link_expr is not None and not eval_expr(link_expr, trace).is_holds:
            return None
        return trace

    init = skel.initial()
    seen = {init}
    frontier = deque([(init, None)])  # (state, linked path cell)
    explored = 0

    def unlink(cell) -> tuple:
        path = []
        while cell is not None:
            path.append((cell[0], cell[1]))
            cell = cell[2]
        path.reverse()
        return tuple(path)

    while frontier:
        state, cell = frontier.popleft()
        explored += 1
        if violation_plausible(state):
            found = try_closure(unlink(cell), state)
            if found is not None:
                return LassoCheckResult("counterexample", found, explored)
        for name, nxt in skel.moves(state):
            if nxt in seen:
                continue
            if len(seen) >= max_states:
                return LassoCheckResult("undetermined", None, explored,
                                        bound=max_states)
            seen.add(nxt)
            frontier.append((nxt, (name, nxt, cell)))
    return LassoCheckResult("holds", None, explored)
