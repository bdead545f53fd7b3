import io
import random

from livenesslab.adversary import alwq_adversary, raw_blackout
from livenesslab.hierarchy import random_lasso
from livenesslab.machine import make_config
from livenesslab.scenarios import paxos_complex_livelock_lasso, raft_eachvote_lasso
from livenesslab.tracefile import trace_from_text, trace_to_text


def roundtrip(trace):
    text = trace_to_text(trace)
    loaded = trace_from_text(text)
    again = trace_to_text(loaded)
    assert again == text
    assert loaded.loop_start == trace.loop_start
    assert len(loaded.states) == len(trace.states)
    for a, b in zip(loaded.states, trace.states):
        assert a == b
    return loaded


def test_scenario_traces_roundtrip_bit_exact():
    roundtrip(raft_eachvote_lasso())
    roundtrip(paxos_complex_livelock_lasso())


def test_machine_traces_roundtrip_bit_exact():
    cfg = make_config(2, 3)
    roundtrip(alwq_adversary(cfg))
    roundtrip(raw_blackout(cfg))


def test_random_lassos_roundtrip():
    rng = random.Random(88)
    for _ in range(30):
        roundtrip(random_lasso(rng))


def test_header_first_line_carries_config_and_loop():
    import json

    text = trace_to_text(raft_eachvote_lasso())
    header = json.loads(text.splitlines()[0])
    assert header["kind"] == "header"
    assert header["loop_start"] == 8
    assert header["config"]["slot_bound"] == 1
    assert sorted(header["config"]["proposers"]) == ["s1", "s2", "s3"]


def test_round_tuples_survive_the_trip():
    cfg = make_config(2, 3)
    loaded = roundtrip(alwq_adversary(cfg))
    assert loaded.config.rounds == cfg.rounds
    assert all(isinstance(r, tuple) for r in loaded.config.rounds)
