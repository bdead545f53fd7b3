"""Every invocation documented in the README runs here and must match its
recorded output."""

import os

import pytest

from livenesslab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_modelcheck_documented_line(capsys):
    code, out, _err = run(capsys, "modelcheck", "--proposers", "2",
                          "--acceptors", "3", "--start", "0")
    assert code == 0
    assert out.startswith("start=0 length=7 states=62 distinct_states=37 seconds=")


def test_modelcheck_csv_columns(tmp_path, capsys):
    csv = tmp_path / "stable.csv"
    code, out, _err = run(capsys, "modelcheck", "--proposers", "2",
                          "--acceptors", "3", "--start", "0", "1", "2", "3",
                          "--csv", str(csv))
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "start,length,states,distinct_states,seconds"
    lengths = [int(line.split(",")[1]) for line in lines[1:]]
    assert lengths == [7, 10, 13, 13]


def test_scenario_and_trace_check_verdicts(tmp_path, capsys):
    lasso = tmp_path / "raft.lasso"
    code, _out, _err = run(capsys, "scenario", "raft-eachvote", "--out", str(lasso))
    assert code == 0
    code, out, _err = run(capsys, "trace", "check", str(lasso),
                          "--property", "Some-Learn")
    assert code == 1
    assert out.strip() == "Some-Learn: Violated"
    code, out, _err = run(capsys, "trace", "check", str(lasso),
                          "--property", "Each-Vote")
    assert code == 0
    assert out.strip() == "Each-Vote: Holds"


def test_spec_parse_documented_dump(capsys):
    code, out, _err = run(capsys, "spec", "parse",
                          "evt alw some q in quorums has q nf")
    assert code == 0
    assert out == (
        "property:\n"
        "  Evt\n"
        "    Alw\n"
        "      Some(var='q', domain=NamedDomain(name='quorums', at=None))\n"
        "        NfSet(target=Var(name='q'))\n"
    )


def test_spec_print_with_param(capsys):
    code, out, _err = run(capsys, "spec", "print",
                          "each p1.sent m to p2 has (p2.received m from p1 after D)",
                          "--param", "D=3")
    assert code == 0
    assert out.strip() == \
        "property = each p1.sent m to p2 has p2.received m from p1 after 3"


def test_spec_parse_syntax_error_is_usage(capsys):
    code, _out, err = run(capsys, "spec", "parse", "evt alw some q in has q nf")
    assert code == 2
    assert "syntax error at 1:" in err


def test_catalog_list_has_all_rows(capsys):
    code, out, _err = run(capsys, "catalog", "list")
    assert code == 0
    assert len(out.strip().splitlines()) == 22
    assert "evt alw some q in quorums has q nf" in out


def test_simulate_documented_runs(tmp_path, capsys):
    out_file = tmp_path / "run.trace"
    code, _out, err = run(capsys, "simulate", "--target", "Fair,Alw-Q",
                          "--mode", "satisfy", "--seed", "7",
                          "--out", str(out_file))
    assert code == 0
    assert "Fair: wanted satisfy, got Holds" in err
    rotate = tmp_path / "rotate.trace"
    code, _out, err = run(capsys, "simulate", "--target",
                          "Fair:satisfy,Q-Alw:violate", "--seed", "7",
                          "--out", str(rotate))
    assert code == 0
    assert "Q-Alw: wanted violate, got Violated" in err
    from livenesslab.tracefile import read_trace

    with open(out_file) as fp:
        trace = read_trace(fp)
    assert trace.loop_start is not None


def test_hierarchy_check_documented(tmp_path, capsys):
    report = tmp_path / "hierarchy.txt"
    code, out, _err = run(capsys, "hierarchy", "check", "--corpus", "200",
                          "--seed", "1", "--report", str(report))
    assert code == 0
    assert "=> Raw" in out
    text = report.read_text()
    assert '"corpus_size": 200' in text


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["modelcheck", "--proposers", "2", "--acceptors", "3",
              "--start", "0", "--bogus"])
    assert exc.value.code == 2


def test_trace_check_undetermined_exit_code(tmp_path, capsys):
    # a finite prefix of the raft lasso cannot refute an eventuality
    from livenesslab.scenarios import raft_eachvote_lasso
    from livenesslab.temporal import Trace
    from livenesslab.tracefile import write_trace

    lasso = raft_eachvote_lasso()
    finite = Trace(lasso.states[:4], lasso.config)
    path = tmp_path / "prefix.trace"
    with open(path, "w") as fp:
        write_trace(finite, fp)
    code, out, _err = run(capsys, "trace", "check", str(path),
                          "--property", "Some-Learn")
    assert code == 3
    assert "Undetermined" in out
