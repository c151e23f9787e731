from __future__ import annotations

from artifact.grammar import builtin_hazel
from artifact.molder import (
    LexToken,
    MoldChoice,
    ObligationDelta,
    candidates,
    choose,
    lex,
    machinery,
)
from artifact.parser import ObligationCount, start_stack

_G = builtin_hazel()
_M = machinery(_G)


# ---------------------------------------------------------------------------
# candidate enumeration


def test_reserved_word_shadows_identifier():
    assert [str(t) for t in candidates(_G, "let")] == ["let@E.0.0"]


def test_identifier_molds_across_sorts():
    assert [str(t) for t in candidates(_G, "x")] == ["$id@E.4.0", "$id@P.2.0", "$id@T.1.0"]


def test_number_molds_single():
    assert [str(t) for t in candidates(_G, "42")] == ["$num@E.4.0"]


def test_minus_molds_infix_and_prefix():
    assert [str(t) for t in candidates(_G, "-")] == ["-@E.1.1", "-@E.3.0"]


def test_unknown_text_has_no_candidates():
    assert candidates(_G, "%") == []
    assert candidates(_G, "Xyz") == []  # classes are anchored full matches


# ---------------------------------------------------------------------------
# choosing


def test_choose_minimizes_obligation_delta():
    k = _M.parser.push(start_stack(), [], _M.token_for(_G.tile_at("E", 0, 0, 0), "let"))
    audit: list = []
    mc = choose(_G, k, [], "(", audit=audit)
    assert str(mc.tile) == "(@P.2.0" and mc.delta.is_zero()
    assert {a["mold"]: a["delta"] for a in audit} == {
        "(@E.4.0": {"ghosts": 1, "infix_grout": 0, "operand_grout": 1, "sort_grout": 0},
        "(@P.2.0": {"ghosts": 0, "infix_grout": 0, "operand_grout": 0, "sort_grout": 0},
        "(@T.1.0": {"ghosts": 0, "infix_grout": 0, "operand_grout": 0, "sort_grout": 1},
    }
    def weight(d):
        return (d["infix_grout"], d["sort_grout"], d["ghosts"], d["operand_grout"])

    assert all(mc.delta.weight() <= weight(a["delta"]) for a in audit)


def test_choose_after_matches_direct_push():
    k = start_stack()
    for tx in ["let", "x", "=", "2", "+"]:
        mc = choose(_G, k, [], tx)
        assert mc.after == _M.parser.push(k, [], _M.token_for(mc.tile, tx))
        k = mc.after


def test_choose_unknown_is_inert():
    mc = choose(_G, start_stack(), [], "%")
    assert mc == MoldChoice(None, (), ObligationDelta())
    assert mc.after is None


def test_choose_plan_records_final_action():
    mc = choose(_G, start_stack(), [], "2")
    assert mc.plan[-1]["action"] == "shift"
    assert mc.delta.is_zero()


def test_machinery_is_cached_per_grammar():
    assert machinery(_G) is machinery(_G)
    assert machinery(builtin_hazel()) is not _M


# ---------------------------------------------------------------------------
# lexing


def test_lex_maximal_munch_prefers_long_labels():
    assert [t.text for t in lex(_G, "2-->3")] == ["2", "-", "->", "3"]
    assert [t.text for t in lex(_G, "x=>y")] == ["x", "=>", "y"]
    assert [t.text for t in lex(_G, "x=y")] == ["x", "=", "y"]


def test_lex_kinds():
    assert lex(_G, "2 %\nfoo_2x") == [
        LexToken("2", "token"),
        LexToken(" ", "space"),
        LexToken("%", "unknown"),
        LexToken("\n", "newline"),
        LexToken("foo_2x", "token"),
    ]


def test_lex_runs_of_spaces_collapse():
    assert lex(_G, "2   +") == [
        LexToken("2", "token"),
        LexToken("   ", "space"),
        LexToken("+", "token"),
    ]


def test_lex_number_then_identifier():
    assert [t.text for t in lex(_G, "42x")] == ["42", "x"]


def test_lex_empty():
    assert lex(_G, "") == []


# ---------------------------------------------------------------------------
# deltas


def test_delta_orders_lexicographically():
    assert ObligationDelta(0, 1, 1, 1) < ObligationDelta(1, 0, 0, 0)
    assert ObligationDelta(0, 0, 0, 2) < ObligationDelta(0, 0, 1, 0)
    assert not ObligationDelta() < ObligationDelta()


def test_delta_between_counts():
    a = ObligationCount(infix=1, sort=0, ghost=2, operand=3)
    b = ObligationCount(infix=1, sort=1, ghost=0, operand=1)
    d = ObligationDelta.between(a, b)
    assert d.weight() == (0, -1, 2, 2)
    assert ObligationDelta.between(a, a).is_zero()
