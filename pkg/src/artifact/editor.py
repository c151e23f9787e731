"""Interactive structure editor driven by the molding parser.

Edit state is a committed token buffer plus a caret and pending text.  Every
structural change reparses the buffer left to right, molding each token
against the stack built so far, so tokens after an edit re-mold against
their new left context (a prefix cache keeps the reparse incremental).
Ghosts and grout are parse material rather than buffer content: each reparse
regenerates them and the display places them at their term-order positions.
That is what makes typing a ghost's text solidify it in place, and deleting
a requisite tile bring its ghost back — or, where the grammar no longer owes
the tile, swap in grout instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .elaboration import GROUT_GLYPH
from .grammar import PBG
from .molder import candidates, choose, machinery
from .parser import Term, start_stack

# ---------------------------------------------------------------------------
# state and events


@dataclass(frozen=True)
class BufferItem:
    text: str
    kind: str  # "token" | "newline" | "unmolded"


@dataclass(frozen=True)
class Event:
    kind: str  # "insert" | "backspace" | "move" | "tab" | "newline"
    text: str = ""
    dir: str = ""


_EVENT_KINDS = ("insert", "backspace", "move", "tab", "newline")


def parse_event(d: dict) -> Event:
    kind = d.get("kind")
    if kind not in _EVENT_KINDS:
        raise ValueError(f"unknown event kind {kind!r}")
    if kind == "move" and d.get("dir") not in ("left", "right"):
        raise ValueError("move event needs dir left|right")
    return Event(kind, str(d.get("text", "")), str(d.get("dir", "")))


@dataclass(frozen=True)
class EditState:
    """Committed buffer, caret as a display-gap index, and pending text with
    the buffer position it will commit into."""

    items: tuple[BufferItem, ...] = ()
    caret: int = 0
    pending: str = ""
    anchor: int = 0


def initial_state() -> EditState:
    return EditState()


# ---------------------------------------------------------------------------
# reparse with prefix reuse

_INCR: dict[int, tuple] = {}


def parse_texts(g: PBG, texts: tuple[str, ...], late: tuple[bool, ...] | None = None):
    """Mold and push the committed token texts left to right and return the
    program term.  A token flagged late opens a new line, so ghost completions
    owed by the enclosing production are placed before it.  The cache keeps
    the stack after every prefix, so an edit at position k reuses the parse of
    tokens 0..k-1 and only the suffix is reparsed."""
    m = machinery(g)
    if late is None:
        late = (False,) * len(texts)
    keyed = tuple(zip(texts, late))
    stacks = [start_stack()]
    cached = _INCR.get(id(g))
    if cached is not None and cached[0] is g:
        old_keyed, old_stacks = cached[1], cached[2]
        n = 0
        while n < len(keyed) and n < len(old_keyed) and keyed[n] == old_keyed[n]:
            n += 1
        stacks = old_stacks[: n + 1]
    while len(stacks) <= len(texts):
        i = len(stacks) - 1
        mc = choose(g, stacks[-1], [], texts[i])
        if late[i]:
            tok = m.token_for(mc.tile, texts[i])
            stacks.append(m.parser.push(stacks[-1], [], tok, late=True))
        else:
            stacks.append(mc.after)
    if len(_INCR) > 8:
        _INCR.clear()
    _INCR[id(g)] = (g, keyed, stacks)
    final = m.parser.push(stacks[-1], [], m.parser.end_token())
    return final.link.item


# ---------------------------------------------------------------------------
# display assembly


@dataclass
class DisplayToken:
    text: str
    kind: str  # "tile" | "ghost" | "grout" | "unmolded" | "pending" | "newline"
    sort: str | None
    grout_kind: str | None
    template: str
    pos: int
    buffer_index: int | None
    insert_point: int
    term_path: tuple


def _flat(term) -> list[tuple]:
    """Leaf tokens of the term with their enclosing-term id paths
    (outermost first)."""
    out: list[tuple] = []
    counter = [0]

    def walk(x, path):
        if isinstance(x, Term):
            tid = counter[0]
            counter[0] += 1
            for c in x.children:
                walk(c, path + (tid,))
        else:
            out.append((x, path))

    walk(term, ())
    return out


def _display(g: PBG, st: EditState) -> list[DisplayToken]:
    items = list(st.items)
    pending_index = None
    if st.pending:
        pending_index = max(0, min(st.anchor, len(items)))
        kind = "token" if candidates(g, st.pending) else "unmolded"
        items.insert(pending_index, BufferItem(st.pending, kind))
    texts = []
    late = []
    broke = False
    for it in items:
        if it.kind == "newline":
            broke = True
        elif it.kind == "token":
            texts.append(it.text)
            late.append(broke)
            broke = False
    term = parse_texts(g, tuple(texts), tuple(late))

    entries: list[DisplayToken] = []
    bi = 0

    def flush_trivia():
        nonlocal bi
        while bi < len(items) and items[bi].kind != "token":
            it = items[bi]
            kind = "newline" if it.kind == "newline" else ("pending" if bi == pending_index else "unmolded")
            entries.append(DisplayToken(it.text, kind, None, None, "", -1, bi, bi + 1, ()))
            bi += 1

    for tok, path in _flat(term):
        if tok.ghost:
            entries.append(
                DisplayToken(tok.text, "ghost", tok.terminal.sort, None, tok.template, tok.pos, None, bi, path)
            )
        elif tok.terminal.kind == "grout":
            entries.append(
                DisplayToken(
                    GROUT_GLYPH[tok.terminal.shape],
                    "grout",
                    tok.terminal.sort,
                    tok.terminal.shape,
                    tok.template,
                    tok.pos,
                    None,
                    bi,
                    path,
                )
            )
        else:
            flush_trivia()
            it = items[bi]
            kind = "pending" if bi == pending_index else "tile"
            entries.append(
                DisplayToken(it.text, kind, tok.terminal.sort, None, tok.template, tok.pos, bi, bi + 1, path)
            )
            bi += 1
    flush_trivia()
    return entries


def _clamp(caret: int, entries: list) -> int:
    return max(0, min(caret, len(entries)))


def _caret_after_buffer(entries: list[DisplayToken], bindex: int) -> int:
    if bindex < 0:
        return 0
    for i, e in enumerate(entries):
        if e.buffer_index == bindex:
            return i + 1
    return len(entries)


def _caret_after_pending(entries: list[DisplayToken]) -> int:
    for i, e in enumerate(entries):
        if e.kind == "pending":
            return i + 1
    return len(entries)


def _insert_point(g: PBG, st: EditState) -> int:
    """Buffer position where material typed at the caret lands."""
    entries = _display(g, st)
    p = 0
    for e in entries[: _clamp(st.caret, entries)]:
        if e.buffer_index is not None:
            p = e.buffer_index + 1
    return p


# ---------------------------------------------------------------------------
# events


def _extendable(g: PBG, text: str) -> bool:
    """True if the text is, or is a prefix of, some moldable token."""
    if any(t.label.startswith(text) for t in g.tiles if not t.is_class):
        return True
    return bool(g.class_tiles(text))


def _commit(g: PBG, st: EditState) -> EditState:
    if not st.pending:
        return st
    kind = "token" if candidates(g, st.pending) else "unmolded"
    a = max(0, min(st.anchor, len(st.items)))
    items = st.items[:a] + (BufferItem(st.pending, kind),) + st.items[a:]
    st = EditState(items, 0, "", 0)
    return replace(st, caret=_caret_after_buffer(_display(g, st), a))


def _with_pending(g: PBG, st: EditState) -> EditState:
    return replace(st, caret=_caret_after_pending(_display(g, st)))


def _insert_char(g: PBG, st: EditState, ch: str) -> EditState:
    if ch == "\n":
        return _newline(g, st)
    if ch == " ":
        # an auto-inserted display space absorbs the typed one
        return _commit(g, st) if st.pending else st
    if st.pending and not _extendable(g, st.pending + ch):
        st = _commit(g, st)
    if st.pending:
        st = replace(st, pending=st.pending + ch)
    else:
        st = replace(st, pending=ch, anchor=_insert_point(g, st))
    if not _extendable(g, st.pending):
        return _commit(g, st)
    return _with_pending(g, st)


def _newline(g: PBG, st: EditState) -> EditState:
    st = _commit(g, st)
    p = _insert_point(g, st)
    items = st.items[:p] + (BufferItem("\n", "newline"),) + st.items[p:]
    st = EditState(items, 0, "", 0)
    return replace(st, caret=_caret_after_buffer(_display(g, st), p))


def _move(g: PBG, st: EditState, d: str) -> EditState:
    st = _commit(g, st)
    entries = _display(g, st)
    caret = _clamp(st.caret, entries) + (-1 if d == "left" else 1)
    return replace(st, caret=_clamp(caret, entries))


def _requisite(g: PBG, e: DisplayToken) -> bool:
    """Tiles that are not a form's opening terminal delete whole: the
    grammar still owes them, so the reparse brings them back as ghosts."""
    if e.kind != "tile" or not e.template:
        return False
    return e.pos not in machinery(g).elab.by_key[e.template].auto.first


def _backspace(g: PBG, st: EditState) -> EditState:
    if st.pending:
        p = st.pending[:-1]
        if p:
            return _with_pending(g, replace(st, pending=p))
        st = EditState(st.items, 0, "", 0)
        return replace(st, caret=_caret_after_buffer(_display(g, st), st.anchor - 1))
    entries = _display(g, st)
    caret = _clamp(st.caret, entries)
    if caret == 0:
        return replace(st, caret=caret)
    left = entries[caret - 1]
    if left.buffer_index is None:
        # ghosts and grout are owed material; they cannot be deleted directly
        return replace(st, caret=caret)
    bindex = left.buffer_index
    it = st.items[bindex]
    if it.kind == "newline" or len(it.text) <= 1 or _requisite(g, left):
        items = st.items[:bindex] + st.items[bindex + 1 :]
        st = EditState(items, 0, "", 0)
        return replace(st, caret=_caret_after_buffer(_display(g, st), bindex - 1))
    text = it.text[:-1]
    kind = "token" if candidates(g, text) else "unmolded"
    items = st.items[:bindex] + (BufferItem(text, kind),) + st.items[bindex + 1 :]
    st = EditState(items, 0, "", 0)
    return replace(st, caret=_caret_after_buffer(_display(g, st), bindex))


def _tab(g: PBG, st: EditState) -> EditState:
    st = _commit(g, st)
    entries = _display(g, st)
    caret = _clamp(st.caret, entries)
    for e in entries[caret:]:
        if e.kind == "ghost":
            p = e.insert_point
            items = st.items[:p] + (BufferItem(e.text, "token"),) + st.items[p:]
            st = EditState(items, 0, "", 0)
            return replace(st, caret=_caret_after_buffer(_display(g, st), p))
    return replace(st, caret=caret)


def apply(g: PBG, st: EditState, e: Event) -> EditState:
    if e.kind == "insert":
        for ch in e.text:
            st = _insert_char(g, st, ch)
        return st
    if e.kind == "backspace":
        return _backspace(g, st)
    if e.kind == "move":
        return _move(g, st, e.dir)
    if e.kind == "tab":
        return _tab(g, st)
    if e.kind == "newline":
        return _newline(g, st)
    raise ValueError(f"unknown event kind {e.kind!r}")


# ---------------------------------------------------------------------------
# rendering


def render(g: PBG, st: EditState) -> dict:
    """Display model: lines of tokens with sort, tip shapes for the caret
    term, ghost/grout/unmolded flags, and per-line indentation (children of
    a multi-line term indent two spaces; its own later tiles align with the
    opener)."""
    entries = _display(g, st)
    caret = _clamp(st.caret, entries)
    anchor = entries[caret - 1] if caret > 0 else (entries[0] if entries else None)
    caret_term = anchor.term_path[-1] if anchor is not None and anchor.term_path else None

    lines: list[list[tuple[int, DisplayToken]]] = [[]]
    for i, e in enumerate(entries):
        if e.kind == "newline":
            lines.append([])
        else:
            lines[-1].append((i, e))

    first_line: dict[int, int] = {}
    for li, line in enumerate(lines):
        for _i, e in line:
            for tid in e.term_path:
                first_line.setdefault(tid, li)

    by_key = machinery(g).elab.by_key
    indents: list[int] = []
    for li, line in enumerate(lines):
        ind = 0
        if line:
            head = line[0][1]
            for tid in reversed(head.term_path):
                if first_line.get(tid, li) < li:
                    base = indents[first_line[tid]]
                    own_tile = head.term_path[-1] == tid and head.kind in ("tile", "ghost")
                    ind = base if own_tile else base + 2
                    break
        indents.append(ind)

    model_lines = []
    for li, line in enumerate(lines):
        toks = []
        for i, e in line:
            in_term = caret_term is not None and caret_term in e.term_path
            tip_l = tip_r = None
            if in_term and e.template:
                auto = by_key[e.template].auto
                tip_l = "convex" if e.pos in auto.first else "concave"
                tip_r = "convex" if e.pos in auto.last else "concave"
            toks.append(
                {
                    "text": e.text,
                    "sort": e.sort,
                    "left_tip": tip_l,
                    "right_tip": tip_r,
                    "ghost": e.kind == "ghost",
                    "grout_kind": e.grout_kind,
                    "unmolded": e.kind == "unmolded" or (e.kind == "pending" and e.sort is None),
                    "caret_here": i == caret - 1,
                    "underline_group": 1 if in_term else 0,
                }
            )
        model_lines.append({"indent": indents[li], "tokens": toks})
    return {"lines": model_lines, "caret": caret}


def render_text(model: dict, ascii_mode: bool = False) -> str:
    """One-line-per-row plain text view of a render model: ghosts in
    [brackets], unmolded text in !bangs!, grout as glyphs."""
    from .elaboration import GROUT_ASCII

    rows = []
    for line in model["lines"]:
        parts = []
        for t in line["tokens"]:
            text = t["text"]
            if t["grout_kind"] is not None and ascii_mode:
                text = GROUT_ASCII[t["grout_kind"]]
            if t["ghost"]:
                text = f"[{text}]"
            elif t["unmolded"]:
                text = f"!{text}!"
            parts.append(text)
        rows.append(" " * line["indent"] + " ".join(parts))
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# session protocol (line JSON, v1)


def hello() -> dict:
    return {"type": "hello", "v": 1}


def handle_request(g: PBG, st: EditState, req) -> tuple[EditState, dict]:
    """One protocol step: an {"type": "event", "event": {...}} request maps
    to a {"type": "render", "model": {...}} response; anything else is an
    error response that leaves the state unchanged."""
    if not isinstance(req, dict) or req.get("type") != "event":
        return st, {"type": "error", "message": 'expected {"type": "event", "event": {...}}'}
    try:
        ev = parse_event(req.get("event") or {})
    except ValueError as ex:
        return st, {"type": "error", "message": str(ex)}
    st = apply(g, st, ev)
    return st, {"type": "render", "model": render(g, st)}


def run_script(g: PBG, events) -> list[dict]:
    """Render models for the initial state and after each event."""
    st = initial_state()
    out = [render(g, st)]
    for e in events:
        if isinstance(e, dict):
            e = parse_event(e)
        st = apply(g, st, e)
        out.append(render(g, st))
    return out
