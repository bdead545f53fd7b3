import random

import pytest

from livenesslab import catalog
from livenesslab.language import (
    SpecSyntaxError, UnboundParameter, parse, parse_blocks, print_expr,
)
from livenesslab.temporal import (
    Alw, And, Atom, Each, EachSent, Evt, Implies, NfSet, Some, Var,
    eval_expr,
)
from livenesslab.hierarchy import make_corpus

from oracles import random_expr

PARAMS = {"D": 3, "D1": 2, "D2": 2, "n": 2}


def build_for(kind, name):
    if kind == catalog.LINK:
        return catalog.link_property(name, D=PARAMS["D"] if name == "Sure" else None)
    if kind == catalog.SERVER:
        if name == "PQ-Dur":
            return catalog.server_property(name, D=PARAMS["D"])
        if name == "PQ-Extra-Dur":
            return catalog.server_property(name, D1=PARAMS["D1"], D2=PARAMS["D2"])
        return catalog.server_property(name)
    if kind == catalog.ASSERTION_SINGLE:
        return catalog.assertion_single(name)
    return catalog.assertion_multi(name, None if name == "Resp" else PARAMS["n"])


def test_all_catalog_strings_parse_to_the_constructors():
    for (kind, name), text in catalog.CANONICAL_TEXT.items():
        assert parse(text, PARAMS) == build_for(kind, name), (kind, name)


def test_catalog_print_reparses_identically():
    for (kind, name), text in catalog.CANONICAL_TEXT.items():
        expr = parse(text, PARAMS)
        assert parse(print_expr(expr), PARAMS) == expr, (kind, name)


def test_sixteen_strings_of_record():
    assert len(catalog.CATALOG_STRINGS) == 16
    kinds = [k for (k, _n) in catalog.CATALOG_STRINGS]
    assert kinds.count(catalog.LINK) == 3
    assert kinds.count(catalog.SERVER) == 7
    assert kinds.count(catalog.ASSERTION_SINGLE) == 6


def test_fair_parses_to_event_quantification():
    expr = parse("each p1.sent m to p2 has evt p2.received m from p1")
    assert isinstance(expr, EachSent)
    assert expr.body == Evt(Atom("received", (Var("p2"), Var("m"), Var("p1"))))


def test_alwq_string_shape():
    expr = parse("evt alw some q in quorums has q nf")
    assert isinstance(expr, Evt)
    assert isinstance(expr.body, Alw)
    assert isinstance(expr.body.body, Some)
    assert expr.body.body.body == NfSet(Var("q"))


def test_paren_normalization():
    expr = parse("some p in servers, q in quorums has (p.nf and (q nf))")
    printed = print_expr(expr)
    assert printed == "some p in servers, q in quorums has p.nf and q nf"
    assert parse(printed) == expr


def test_quantifier_swallows_rest_after_connective():
    expr = parse("some p in servers has p.nf and some q in quorums has q nf and p.is_primary")
    # the inner quantifier owns everything to its right
    inner = expr.body
    assert isinstance(inner, And)
    assert isinstance(inner.right, Some)
    assert isinstance(inner.right.body, And)


def test_implies_is_right_associative():
    expr = parse("some c in clients, v in values has "
                 "c.sent ('req',v) implies c.sent ('req',v) implies c.received ('resp',v)")
    body = expr.body.body
    assert isinstance(body, Implies)
    assert isinstance(body.right, Implies)


def test_syntax_error_carries_span_and_expectations():
    with pytest.raises(SpecSyntaxError) as err:
        parse("evt alw some q in has q nf")
    assert err.value.span.line == 1
    assert err.value.expected


def test_unbound_parameter():
    with pytest.raises(UnboundParameter):
        parse("each p1.sent m to p2 has (p2.received m from p1 after D)")


def test_unknown_domain_rejected_at_parse_time():
    from livenesslab.language import UnknownDomain

    with pytest.raises(UnknownDomain):
        parse("some q in quorumz has q nf")
    # a set variable bound by an enclosing quantifier is a valid domain
    parse("some q in quorums has each p in q has p.nf")
    parse("some q in quorums, p in q has p.nf")


def test_parse_blocks():
    text = """
# two named properties
Mine = evt alw some q in quorums has q nf
Yours(D) = each p1.sent m to p2 has (p2.received m from p1 after D)
"""
    blocks = parse_blocks(text, {"D": 4})
    assert set(blocks) == {"Mine", "Yours"}
    assert blocks["Mine"] == catalog.server_property("Alw-Q")
    assert blocks["Yours"] == catalog.link_property("Sure", D=4)
    with pytest.raises(UnboundParameter):
        parse_blocks("Yours(D) = alw servers nf", {})


def test_single_expression_file():
    blocks = parse_blocks("evt alw servers nf\n")
    assert blocks == {"property": catalog.server_property("Alw")}


def test_random_roundtrip():
    rng = random.Random(5)
    for _ in range(300):
        expr = random_expr(rng, depth=4)
        printed = print_expr(expr)
        assert parse(printed) == expr, printed


def test_parsed_equals_built_eval_equivalence_on_random_traces():
    corpus = make_corpus(40, seed=3)
    for (kind, name), text in catalog.CATALOG_STRINGS.items():
        parsed = parse(text, PARAMS)
        built = build_for(kind, name)
        for trace in corpus[:10]:
            assert eval_expr(parsed, trace) == eval_expr(built, trace)
