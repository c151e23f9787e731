from __future__ import annotations

import pytest

from artifact.editor import (
    BufferItem,
    EditState,
    Event,
    apply,
    handle_request,
    hello,
    initial_state,
    parse_event,
    parse_texts,
    render,
    render_text,
    run_script,
)
from artifact.grammar import builtin_hazel
from artifact.parser import obligations, render_item

_G = builtin_hazel()


def _type(st: EditState, text: str) -> EditState:
    return apply(_G, st, Event("insert", text))


def _view(st: EditState):
    m = render(_G, st)
    return render_text(m), m["caret"]


# ---------------------------------------------------------------------------
# insertion and committing


def test_typing_a_clean_expression():
    st = _type(initial_state(), "2 + 3")
    assert _view(st) == ("2 + 3", 3)


def test_spaces_commit_but_are_not_stored():
    st = _type(initial_state(), "2 + 3 ")
    assert [it.kind for it in st.items] == ["token", "token", "token"]
    assert st.pending == ""


def test_prefix_of_keyword_stays_pending():
    st = _type(initial_state(), "le")
    assert st.pending == "le" and st.items == ()
    assert _view(st) == ("le", 1)


def test_keyword_commits_and_ghosts_appear():
    st = _type(initial_state(), "let ")
    assert _view(st) == ("let ⬚ [=] ⬚ [in] ⬚", 1)


def test_operator_break_commits_pending_number():
    st = _type(initial_state(), "2+")
    assert st.items == (BufferItem("2", "token"),) and st.pending == "+"
    assert _view(st)[0] == "2 + ⬚"


def test_unmoldable_text_renders_bang_wrapped():
    st = _type(initial_state(), "2 % 3")
    assert _view(st)[0] == "2 ⟐ !%! 3"
    assert BufferItem("%", "unmolded") in st.items


# ---------------------------------------------------------------------------
# backspace


def test_backspace_trims_pending():
    st = _type(initial_state(), "le")
    st = apply(_G, st, Event("backspace"))
    assert st.pending == "l" and _view(st) == ("l", 1)


def test_backspace_cannot_delete_owed_material():
    st = _type(initial_state(), "let x ")
    st = apply(_G, st, Event("move", dir="right"))  # caret right of ghost '='
    assert _view(apply(_G, st, Event("backspace"))) == _view(st)


def test_backspace_removes_requisite_tile_whole():
    st = _type(initial_state(), "let x = 2 in 3 ")
    st = apply(_G, st, Event("move", dir="left"))
    st = apply(_G, st, Event("backspace"))
    assert _view(st) == ("let x = 2 [in] 3", 4)


def test_backspace_on_infix_operator_leaves_grout():
    st = _type(initial_state(), "2 + 3 ")
    st = apply(_G, st, Event("move", dir="left"))
    st = apply(_G, st, Event("backspace"))
    assert _view(st) == ("2 ⟐ 3", 1)


def test_backspace_shrinks_multichar_token():
    st = _type(initial_state(), "foo ")
    st = apply(_G, st, Event("backspace"))
    assert st.items == (BufferItem("fo", "token"),)
    assert _view(st) == ("fo", 1)


def test_backspace_at_origin_is_noop():
    st = apply(_G, initial_state(), Event("backspace"))
    assert st == initial_state()


# ---------------------------------------------------------------------------
# tab


def test_tab_solidifies_next_ghost():
    st = _type(initial_state(), "let x ")
    st = apply(_G, st, Event("tab"))
    assert _view(st) == ("let x = ⬚ [in] ⬚", 3)
    st = apply(_G, st, Event("tab"))
    assert _view(st)[0] == "let x = ⬚ in ⬚"


def test_tab_without_ghost_is_noop():
    st = _type(initial_state(), "2 ")
    assert render(_G, apply(_G, st, Event("tab"))) == render(_G, st)


# ---------------------------------------------------------------------------
# movement and newlines


def test_move_clamps_at_edges():
    st = apply(_G, initial_state(), Event("move", dir="left"))
    assert render(_G, st)["caret"] == 0


def test_newline_is_stored_and_indents_continuation():
    st = _type(initial_state(), "2 +")
    st = apply(_G, st, Event("newline"))
    st = _type(st, "3 ")
    assert BufferItem("\n", "newline") in st.items
    m = render(_G, st)
    assert [(ln["indent"], [t["text"] for t in ln["tokens"]]) for ln in m["lines"]] == [
        (0, ["2", "+"]),
        (2, ["3"]),
    ]


def test_newline_token_placement_prefers_later_slot():
    st = _type(initial_state(), "let x =")
    st = apply(_G, st, Event("newline"))
    st = _type(st, "2 ")
    assert render_text(render(_G, st)) == "let x = ⬚ [in]\n  2"


# ---------------------------------------------------------------------------
# render model details


def test_tips_and_underline_mark_the_caret_term():
    m = render(_G, _type(initial_state(), "let "))
    toks = m["lines"][0]["tokens"]
    assert [t["text"] for t in toks] == ["let", "⬚", "=", "⬚", "in", "⬚"]
    assert toks[0]["caret_here"] and not any(t["caret_here"] for t in toks[1:])
    assert (toks[0]["left_tip"], toks[0]["right_tip"]) == ("convex", "concave")
    assert (toks[2]["left_tip"], toks[2]["right_tip"]) == ("concave", "concave")
    assert toks[2]["ghost"] and not toks[0]["ghost"]
    assert all(t["underline_group"] == 1 for t in toks)
    assert toks[1]["grout_kind"] == "operand"


def test_tokens_outside_caret_term_have_no_tips():
    st = _type(initial_state(), "2 * 3 + x ")
    toks = render(_G, st)["lines"][0]["tokens"]
    at_x = next(t for t in toks if t["text"] == "x")
    at_2 = next(t for t in toks if t["text"] == "2")
    assert at_x["left_tip"] == "convex" and at_2["left_tip"] is None
    assert at_2["underline_group"] == 0


# ---------------------------------------------------------------------------
# incremental reparse


def test_parse_texts_is_stable_under_prefix_extension():
    fresh = builtin_hazel()
    a = parse_texts(fresh, ("2", "+"))
    b = parse_texts(fresh, ("2", "+", "3"))
    assert render_item(a) == "((2) + ⬚)"
    assert render_item(b) == "((2) + (3))"
    assert parse_texts(fresh, ("2", "+", "3")) == b
    assert obligations(b).total() == 0


# ---------------------------------------------------------------------------
# session protocol


def test_hello_announces_protocol_v1():
    assert hello() == {"type": "hello", "v": 1}


def test_handle_request_round_trip():
    st, resp = handle_request(_G, initial_state(), {"type": "event", "event": {"kind": "insert", "text": "2 + "}})
    assert resp["type"] == "render"
    assert render_text(resp["model"]) == "2 + ⬚"
    assert st.items[0] == BufferItem("2", "token")


def test_handle_request_rejects_malformed():
    st = initial_state()
    for req in (None, [], {"type": "noise"}, {"type": "event"}, {"type": "event", "event": {"kind": "jump"}}):
        st2, resp = handle_request(_G, st, req)
        assert resp["type"] == "error" and st2 == st


def test_parse_event_validates_move_direction():
    with pytest.raises(ValueError):
        parse_event({"kind": "move", "dir": "up"})
    assert parse_event({"kind": "move", "dir": "left"}) == Event("move", "", "left")


def test_run_script_renders_each_step():
    models = run_script(_G, [{"kind": "insert", "text": "2 + "}, {"kind": "insert", "text": "3 "}])
    assert len(models) == 3
    assert render_text(models[0]) == "⬚"  # the empty program is one hole
    assert render_text(models[1]) == "2 + ⬚"
    assert render_text(models[2]) == "2 + 3"
