"""Line-delimited trace and schedule files.

One JSON record per line: a header carrying the system config and the
optional loop start, then one record per tick with every set rendered as a
sorted array.  Writing is canonical (sorted keys, fixed separators), so
write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json
from typing import IO

from .machine import SystemConfig
from .temporal import ObservationState, Trace

_SET_FIELDS = (
    "nf_procs", "primaries", "roster", "sent", "received", "voted",
    "learned", "executed", "requested", "responded",
)


def _plain(value):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, frozenset):
        return sorted((_plain(v) for v in value), key=_sort_key)
    return value


def _sort_key(value):
    return json.dumps(value, sort_keys=True)


def _frozen(value):
    if isinstance(value, list):
        return tuple(_frozen(v) for v in value)
    return value


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def config_record(config: SystemConfig) -> dict:
    return {
        "proposers": list(config.proposers),
        "acceptors": list(config.acceptors),
        "clients": list(config.clients),
        "quorums": sorted((sorted(q) for q in config.quorums), key=_sort_key),
        "values": _plain(tuple(config.values)),
        "rounds": _plain(tuple(config.rounds)),
        "slot_bound": config.slot_bound,
    }


def config_from_record(rec: dict) -> SystemConfig:
    return SystemConfig(
        proposers=tuple(rec["proposers"]),
        acceptors=tuple(rec["acceptors"]),
        clients=tuple(rec["clients"]),
        quorums=tuple(frozenset(q) for q in rec["quorums"]),
        values=tuple(_frozen(v) for v in rec["values"]),
        rounds=tuple(_frozen(r) for r in rec["rounds"]),
        slot_bound=rec["slot_bound"],
    )


def write_trace(trace: Trace, fp: IO[str]) -> None:
    header = {"kind": "header", "config": config_record(trace.config),
              "loop_start": trace.loop_start}
    fp.write(_dump(header) + "\n")
    for t, st in enumerate(trace.states):
        rec = {"kind": "state", "tick": t}
        for f in _SET_FIELDS:
            rec[f] = _plain(getattr(st, f))
        fp.write(_dump(rec) + "\n")


def read_trace(fp: IO[str]) -> Trace:
    lines = [line for line in fp.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty trace file")
    header = json.loads(lines[0])
    if header.get("kind") != "header":
        raise ValueError("trace file must start with a header record")
    config = config_from_record(header["config"])
    states = []
    for line in lines[1:]:
        rec = json.loads(line)
        if rec.get("kind") != "state":
            raise ValueError(f"unexpected record kind {rec.get('kind')!r}")
        kwargs = {}
        for f in _SET_FIELDS:
            kwargs[f] = frozenset(_frozen(v) for v in rec[f])
        states.append(ObservationState(**kwargs))
    return Trace(states, config, loop_start=header.get("loop_start"))


def trace_to_text(trace: Trace) -> str:
    import io

    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def trace_from_text(text: str) -> Trace:
    import io

    return read_trace(io.StringIO(text))


# ---------------------------------------------------------------------------
# schedule files

def write_schedule(schedule, fp: IO[str]) -> None:
    header = {
        "kind": "schedule",
        "config": config_record(schedule.config),
        "seed": schedule.seed,
        "target": schedule.target_record(),
        "loop_start": schedule.loop_start,
        "fault_plan": _plain(tuple(schedule.fault_plan)),
    }
    fp.write(_dump(header) + "\n")
    for rank in schedule.steps:
        fp.write(_dump({"kind": "step", "rank": rank}) + "\n")


def read_schedule(fp: IO[str]):
    from .adversary import Schedule

    lines = [line for line in fp.read().splitlines() if line.strip()]
    header = json.loads(lines[0])
    if header.get("kind") != "schedule":
        raise ValueError("schedule file must start with a schedule record")
    steps = []
    for line in lines[1:]:
        rec = json.loads(line)
        if rec.get("kind") != "step":
            raise ValueError(f"unexpected record kind {rec.get('kind')!r}")
        steps.append(rec["rank"])
    return Schedule(
        config=config_from_record(header["config"]),
        steps=tuple(steps),
        fault_plan=tuple(_frozen(x) for x in header.get("fault_plan", ())),
        loop_start=header.get("loop_start"),
        seed=header.get("seed"),
        target=Schedule.target_from_record(header.get("target")),
    )
