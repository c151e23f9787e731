"""Terms, stacks, and the total error-correcting push machine.

Tokens are molded tile occurrences (solid or ghost) plus the grout the
machine inserts on its own.  A parse stack is a persistent linked sequence
of (relation op, slot, cell item, token) frames over the start delimiter.
Pushing a token searches grammar walks from the stack head (Shift), pops
and completes the top production segment (Reduce), unwinds speculative
grout (Degrout), or removes a ghost tile matched by the incoming solid
token (Consume) — whichever locally minimizes the material obligations in
lexicographic weight order: infix grout, sort-transition grout, ghost
tiles, operand grout.  Every token sequence admits a parse; the machine
completes programs but never deletes input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .elaboration import (
    END,
    GROUT_ASCII,
    GROUT_GLYPH,
    INFIX,
    OPERAND,
    PREFIX,
    START,
    BoundedSort,
    ElaboratedGrammar,
    Template,
    Terminal,
    elaborate,
    grout_terminal,
    unbounded,
)
from .grammar import PBG, TOP, lvl
from .relations import (
    RelationTable,
    RelStep,
    _shortest_completion,
    build_relations,
    iter_walk_lengths,
)

MAX_WALK = 6

# obligation vectors in weight order: (infix, sort, ghost, operand)
OB_ZERO = (0, 0, 0, 0)


def _eq_prefix(w) -> int:
    n = 0
    for s in w.steps:
        if s.op != "=":
            break
        n += 1
    return n


def _ob_add(a: tuple, b: tuple) -> tuple:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def _ob_sub(a: tuple, b: tuple) -> tuple:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3])


@dataclass(frozen=True)
class ObligationCount:
    """Counts of outstanding material, ordered by repair weight when
    compared: infix grout, sort-transition grout, ghost tiles, operand
    grout."""

    operand: int = 0
    ghost: int = 0
    sort: int = 0
    infix: int = 0

    @classmethod
    def from_weight(cls, vec: tuple) -> "ObligationCount":
        return cls(infix=vec[0], sort=vec[1], ghost=vec[2], operand=vec[3])

    def weight(self) -> tuple:
        return (self.infix, self.sort, self.ghost, self.operand)

    def as_dict(self) -> dict:
        return {"ghost": self.ghost, "infix": self.infix, "operand": self.operand, "sort": self.sort}

    def total(self) -> int:
        return self.infix + self.sort + self.ghost + self.operand

    def __add__(self, other: "ObligationCount") -> "ObligationCount":
        return ObligationCount.from_weight(_ob_add(self.weight(), other.weight()))

    def __sub__(self, other: "ObligationCount") -> "ObligationCount":
        return ObligationCount.from_weight(_ob_sub(self.weight(), other.weight()))

    def __lt__(self, other: "ObligationCount") -> bool:
        return self.weight() < other.weight()


@dataclass(frozen=True)
class Token:
    """A molded token on the stack or in a term: a solid tile as lexed, a
    ghost tile the machine owes the grammar, or a grout glyph."""

    terminal: Terminal
    text: str
    ghost: bool = False
    template: str = ""
    pos: int = -1

    @property
    def sort(self) -> str | None:
        return self.terminal.sort

    def ob(self) -> tuple:
        if self.ghost:
            return (0, 0, 1, 0)
        t = self.terminal
        if t.kind == "grout":
            if t.shape == OPERAND:
                return (0, 0, 0, 1)
            if t.shape == INFIX:
                return (1, 0, 0, 0)
            return (0, 1, 0, 0)
        return OB_ZERO


@dataclass(frozen=True)
class Term:
    """A completed production instance: children (tokens and sub-terms)
    aligned position-for-position with a path through the form automaton."""

    template: str
    sort: str
    path: tuple[int, ...]
    children: tuple
    synth: tuple
    ob: tuple

    def obligations(self) -> ObligationCount:
        return ObligationCount.from_weight(self.ob)


def make_term(e: ElaboratedGrammar, t: Template, path, children) -> Term:
    ob = OB_ZERO
    for c in children:
        ob = _ob_add(ob, item_ob(c))
    synth = e.synth(t, path[0], path[-1])
    return Term(t.key, t.sort, tuple(path), tuple(children), synth, ob)


def make_hole(e: ElaboratedGrammar, sort: str) -> Token:
    return Token(grout_terminal(OPERAND, sort), "", False, f"grout/{sort}/operand", 0)


def item_sort(x) -> str | None:
    return x.sort if isinstance(x, Term) else x.terminal.sort


def item_synth(x) -> tuple:
    return x.synth if isinstance(x, Term) else (TOP, TOP)


def item_ob(x) -> tuple:
    return x.ob if isinstance(x, Term) else x.ob()


def item_tokens(x):
    """All leaf tokens of an item, left to right."""
    if isinstance(x, Term):
        for c in x.children:
            yield from item_tokens(c)
    else:
        yield x


def obligations(x) -> ObligationCount:
    """Outstanding material of a term, token, or whole stack."""
    if isinstance(x, Frame):
        return ObligationCount.from_weight(x.ob)
    return ObligationCount.from_weight(item_ob(x))


def _is_bare_hole(x) -> bool:
    return isinstance(x, Token) and x.terminal.kind == "grout" and x.terminal.shape == OPERAND


def item_to_json(x) -> dict:
    if isinstance(x, Term):
        return {"kind": "term", "children": [item_to_json(c) for c in x.children]}
    t = x.terminal
    if t.kind == "grout":
        return {"kind": "grout", "shape": t.shape, "sort": t.grout_sort}
    return {"kind": "token", "text": x.text, "sort": t.sort, "ghost": x.ghost}


def dumps_term(x) -> str:
    return json.dumps(item_to_json(x), sort_keys=True, separators=(",", ":"))


def render_item(x, ascii_mode: bool = False) -> str:
    """Parenthesized tree rendering, for debugging and traces."""
    if isinstance(x, Term):
        inner = " ".join(render_item(c, ascii_mode) for c in x.children)
        return f"({inner})"
    return _render_token(x, ascii_mode)


def render_source(x, ascii_mode: bool = False) -> str:
    """Flat source rendering: the term's tokens in order, ghosts bracketed
    and grout shown as glyphs."""
    return " ".join(_render_token(tk, ascii_mode) for tk in item_tokens(x))


def _render_token(x: Token, ascii_mode: bool) -> str:
    t = x.terminal
    if t.kind == "grout":
        glyph = GROUT_ASCII[t.shape] if ascii_mode else GROUT_GLYPH[t.shape]
        suffix = t.grout_sort if t.shape != OPERAND else ""
        return f"{glyph}{suffix}" if not ascii_mode else glyph
    if x.ghost:
        return f"[{x.text}]"
    return x.text


# ---------------------------------------------------------------------------
# fill


def _grout_template(e: ElaboratedGrammar, sort: str, kind: str, child: str | None = None) -> Template:
    for t in e._grout_templates[sort]:
        if t.kind == kind and (child is None or t.child_sort == child):
            return t
    raise KeyError((sort, kind, child))


def _wrap(e: ElaboratedGrammar, item, sort: str):
    t = _grout_template(e, sort, "prefix", item_sort(item))
    tok = Token(grout_terminal(PREFIX, sort), "", False, t.key, 0)
    return make_term(e, t, (0, 1), (tok, item))


def _chain(e: ElaboratedGrammar, items, sort: str):
    t = _grout_template(e, sort, "chain")
    elems = [it if item_sort(it) == sort else _wrap(e, it, sort) for it in items]
    children = [elems[0]]
    path = [0]
    for i, el in enumerate(elems[1:]):
        gpos, spos = (1, 2) if i == 0 else (3, 4)
        children.append(Token(grout_terminal(INFIX, sort), "", False, t.key, gpos))
        children.append(el)
        path.extend((gpos, spos))
    return make_term(e, t, tuple(path), tuple(children))


def pack(e: ElaboratedGrammar, group, cell: BoundedSort):
    """The cell content for a run of reductions assigned to one slot, or
    None when the bounds cannot admit them."""
    if not group:
        return make_hole(e, cell.sort)
    if len(group) == 1:
        it = group[0]
        s = item_sort(it)
        if s == cell.sort:
            return it if e.analyzes(cell, s, item_synth(it)) else None
        return _wrap(e, it, cell.sort)
    if not e.analyzes(cell, cell.sort, (lvl(0), lvl(0))):
        return None
    return _chain(e, group, cell.sort)


def fill(e: ElaboratedGrammar, rs, slots):
    """Distribute accumulated reductions across a walk's slots: a list of
    cell items aligned with slots, or None when no ordered contiguous
    partition fits (the caller must degrout or reduce instead)."""
    out: list = [None] * len(slots)
    some = [i for i, s in enumerate(slots) if s is not None]
    if not some:
        return out if not rs else None

    def assign(si: int, start: int):
        i = some[si]
        if si == len(some) - 1:
            it = pack(e, rs[start:], slots[i])
            if it is None:
                return False
            out[i] = it
            return True
        for k in range(len(rs) - start, -1, -1):
            it = pack(e, rs[start : start + k], slots[i])
            if it is None:
                continue
            out[i] = it
            if assign(si + 1, start + k):
                return True
        return False

    return out if assign(0, 0) else None


# ---------------------------------------------------------------------------
# stacks


@dataclass(frozen=True)
class Link:
    op: str  # "<" | "="
    slot: BoundedSort | None
    slot_pos: int | None
    item: object | None


@dataclass(frozen=True)
class Frame:
    prev: "Frame | None"
    link: Link | None
    token: Token
    ob: tuple

    def frames(self):
        f = self
        out = []
        while f is not None:
            out.append(f)
            f = f.prev
        return list(reversed(out))

    def __str__(self) -> str:
        parts = []
        for f in self.frames():
            if f.link is not None:
                glyph = "⋖" if f.link.op == "<" else "≐"
                slot = "" if f.link.item is None else f"_{{{render_item(f.link.item)}}}"
                parts.append(f"{glyph}{slot}")
            parts.append(str(f.token.terminal) if f.token.terminal.kind != "tile" else f.token.text)
        return " ".join(parts)


class ParseError(Exception):
    pass


def start_stack() -> Frame:
    return Frame(None, None, Token(START, "", False, "root", 0), OB_ZERO)


# ---------------------------------------------------------------------------
# the machine


class Parser:
    def __init__(self, g: PBG, elab: ElaboratedGrammar | None = None, table: RelationTable | None = None):
        self.g = g
        self.e = elab if elab is not None else elaborate(g)
        self.table = table if table is not None else build_relations(self.e)
        self._tmpl = self.e.by_key

    # -- shift ---------------------------------------------------------------

    def _walk_token(self, step: RelStep) -> Token:
        dst = step.dst
        if dst.kind == "grout":
            return Token(dst, "", False, step.dst_template, step.dst_pos)
        return Token(dst, dst.tile.label, True, step.dst_template, step.dst_pos)

    def _apply_walk(self, stack: Frame, rs, steps, tok: Token) -> Frame | None:
        filled = fill(self.e, rs, [s.slot for s in steps])
        if filled is None:
            return None
        f = stack
        for i, step in enumerate(steps):
            if i == len(steps) - 1:
                token = Token(tok.terminal, tok.text, tok.ghost, step.dst_template, step.dst_pos)
            else:
                token = self._walk_token(step)
            item = filled[i]
            ob = _ob_add(f.ob, token.ob())
            if item is not None:
                ob = _ob_add(ob, item_ob(item))
            f = Frame(f, Link(step.op, step.slot, step.slot_pos, item), token, ob)
        return f

    def _shift_plans(self, stack: Frame, rs, tok: Token, apply_filter: bool = True, all_lengths: bool = False):
        out = []
        for batch in iter_walk_lengths(
            self.table, stack.token.terminal, stack.token.template, tok.terminal, MAX_WALK, apply_filter
        ):
            for w in batch:
                applied = self._apply_walk(stack, rs, w.steps, tok)
                if applied is not None:
                    out.append((w, applied))
            if out and not all_lengths:
                return out
        return out

    def _end_total(self, stack: Frame) -> tuple:
        """Obligations of the whole program if input stopped after this stack:
        the deferred completion cost made explicit."""
        return self.push(stack, [], self.end_token()).ob

    # -- reduce / degrout ------------------------------------------------------

    def _segment(self, stack: Frame):
        frames = []
        f = stack
        while f.link is not None:
            frames.append(f)
            if f.link.op == "<":
                return f.prev, list(reversed(frames))
            f = f.prev
        return None

    def _reduce_sim(self, stack: Frame, rs):
        seg = self._segment(stack)
        if seg is None:
            return None
        below, frames = seg
        t = self._tmpl[frames[0].token.template]
        path: list[int] = []
        children: list = []
        for fr in frames:
            lk = fr.link
            if lk.slot is not None:
                path.append(lk.slot_pos)
                children.append(lk.item)
            path.append(fr.token.pos)
            children.append(fr.token)
        comp = _shortest_completion(t, path[-1])
        if comp is None:
            raise ParseError(f"no completion from position {path[-1]} of {t.key}")
        cells = []
        for q in comp[1:]:
            if t.sort_at(q) is not None:
                cells.append((q, self.e.child_cell(t, q, -1, comp[-1], unbounded(t.sort))))
        filled = fill(self.e, rs, [c for _, c in cells])
        leftover = []
        if filled is None:
            filled = fill(self.e, [], [c for _, c in cells])
            leftover = list(rs)
        ci = 0
        for q in comp[1:]:
            term_at = self.e.terminal_at(t, q)
            if term_at is None:
                path.append(q)
                children.append(filled[ci])
                ci += 1
            else:
                label = term_at.tile.label if term_at.kind == "tile" else ""
                ghost = term_at.kind == "tile"
                path.append(q)
                children.append(Token(term_at, label, ghost, t.key, q))
        term = make_term(self.e, t, path, children)
        return below, [term] + leftover

    def _degrout_sim(self, stack: Frame, rs):
        if stack.token.terminal.kind != "grout":
            return None
        seg = self._segment(stack)
        if seg is None:
            return None
        below, frames = seg
        spliced = [fr.link.item for fr in frames if fr.link.item is not None]
        return below, spliced + list(rs)

    def _consume_sim(self, stack: Frame, rs, tok: Token):
        head = stack.token
        if not head.ghost or head.terminal != tok.terminal or stack.prev is None:
            return None
        item = stack.link.item
        spliced = [] if item is None or _is_bare_hole(item) else [item]
        return stack.prev, spliced + list(rs)

    # -- push -------------------------------------------------------------------

    def push(self, stack: Frame, rs, tok: Token, trace: list | None = None, late: bool = False) -> Frame:
        rs = list(rs)
        while True:
            head = stack.token
            rs_ob = OB_ZERO
            for x in rs:
                rs_ob = _ob_add(rs_ob, item_ob(x))
            before = _ob_add(stack.ob, rs_ob)
            shifts = None

            # classic fast paths (consistent with full arbitration; skipped when a
            # matching ghost can be consumed, since consumption is strictly cheaper)
            can_consume = head.ghost and head.terminal == tok.terminal
            if head.terminal.kind != "grout" and not can_consume:
                gt = self.table.has_gt(head.terminal, tok.terminal)
                adv = self.table.has_advance(head.terminal, tok.terminal)
                if gt and not adv:
                    red = self._reduce_sim(stack, rs)
                    if red is not None:
                        below, rs2 = red
                        after = below.ob
                        for x in rs2:
                            after = _ob_add(after, item_ob(x))
                        if _ob_sub(after, before) == OB_ZERO:
                            self._trace(trace, tok, "reduce", OB_ZERO)
                            stack, rs = below, rs2
                            continue
                elif adv and not gt and not late:
                    shifts = self._shift_plans(stack, rs, tok)
                    if shifts:
                        ranked = sorted(
                            (
                                (_ob_sub(applied.ob, before), w.height, w.length, w.key(), applied)
                                for w, applied in shifts
                            ),
                            key=lambda r: r[:4],
                        )
                        if ranked[0][0] == OB_ZERO:
                            self._trace(trace, tok, "shift", OB_ZERO, ranked[0][1], ranked[0][2])
                            return ranked[0][4]

            # full arbitration
            plans = []
            if shifts is None:
                shifts = self._shift_plans(stack, rs, tok, all_lengths=late)
            for w, applied in shifts:
                delta = _ob_sub(applied.ob, before)
                plans.append((delta, 0, w.height, w.length, w.key(), "shift", applied, w))
            sims = [("degrout", self._degrout_sim(stack, rs))]
            if can_consume:
                sims.append(("consume", self._consume_sim(stack, rs, tok)))
            sims.append(("reduce", self._reduce_sim(stack, rs)))
            for kind, r in sims:
                if r is None:
                    continue
                below, rs2 = r
                after = below.ob
                for x in rs2:
                    after = _ob_add(after, item_ob(x))
                delta = _ob_sub(after, before)
                if kind == "reduce":
                    # reduce is precedence-driven: offered on head ⋗ tok, when
                    # it costs nothing (a fully fed production closing), or as
                    # the fallback when no walk can place the token from here
                    driven = (
                        self.table.has_gt(head.terminal, tok.terminal)
                        or delta == OB_ZERO
                        or not shifts
                    )
                    if not driven:
                        continue
                plans.append((delta, 1, 0, 0, (), kind, below, rs2))
            if not plans:
                for w, applied in self._shift_plans(stack, rs, tok, apply_filter=False):
                    delta = _ob_sub(applied.ob, before)
                    plans.append((delta, 0, w.height, w.length, w.key(), "shift", applied, w))
            if not plans:
                raise ParseError(f"no plan for {tok.text!r} at head {head.terminal}")
            plans.sort(key=lambda p: p[:6])
            best = plans[0]
            if late and best[5] == "shift":
                # a token that opens a new line absorbs the ghosts owed by the
                # open production before it: among walks tied on the completed
                # total, prefer the longest leading ≐-run (requisite tiles
                # materialized now rather than deferred), then the shortest walk
                ranked = sorted(
                    (
                        (_ob_sub(self._end_total(p[6]), before), -_eq_prefix(p[7]), p[3], p[2], p[4], p)
                        for p in plans
                        if p[5] == "shift"
                    ),
                    key=lambda r: r[:5],
                )
                best = ranked[0][5]
            self._trace(trace, tok, best[5], best[0], best[2], best[3])
            if best[5] == "shift":
                return best[6]
            stack, rs = best[6], best[7]

    @staticmethod
    def _trace(trace, tok: Token, action: str, delta: tuple, height: int = 0, length: int = 0) -> None:
        if trace is not None:
            trace.append(
                {
                    "action": action,
                    "delta": ObligationCount.from_weight(delta).as_dict(),
                    "token": tok.text or str(tok.terminal),
                    "height": height,
                    "length": length,
                }
            )

    # -- batch parse --------------------------------------------------------------

    def end_token(self) -> Token:
        return Token(END, "", False, "root", 2)

    def parse(self, tokens, trace: list | None = None):
        stack = start_stack()
        for tok in tokens:
            stack = self.push(stack, [], tok, trace)
        stack = self.push(stack, [], self.end_token(), trace)
        return stack.link.item


def parse(g: PBG, tokens, trace: list | None = None):
    """Fold the push machine over molded tokens and the end delimiter; the
    root cell of the final collapsed stack is the program term."""
    return Parser(g).parse(tokens, trace)


# ---------------------------------------------------------------------------
# well-formedness


def well_formed_term(e: ElaboratedGrammar, n: BoundedSort | None, item, seen: dict | None = None) -> bool:
    if seen is not None:
        key = (id(item), None if n is None else n.key())
        hit = seen.get(key)
        if hit is not None:
            return hit[0]
    ok = _well_formed_term(e, n, item, seen)
    if seen is not None:
        seen[key] = (ok, item)  # keep the item alive so its id stays valid
    return ok


def _well_formed_term(e: ElaboratedGrammar, n: BoundedSort | None, item, seen: dict | None) -> bool:
    if isinstance(item, Token):
        t = item.terminal
        if t.kind != "grout" or t.shape != OPERAND:
            return False
        return n is None or n.sort == t.grout_sort
    if not isinstance(item, Term):
        return False
    t = e.by_key.get(item.template)
    if t is None:
        return False
    cell = n if n is not None else unbounded(item.sort)
    if cell.sort != item.sort:
        return False
    if not e.analyzes(cell, item.sort, item.synth):
        return False
    path, children = item.path, item.children
    if len(path) != len(children) or not path:
        return False
    if path[0] not in t.auto.first or path[-1] not in t.auto.last:
        return False
    for a, b in zip(path, path[1:]):
        if b not in t.auto.follow[a]:
            return False
    for q, child in zip(path, children):
        sort = t.sort_at(q)
        if sort is None:
            if not isinstance(child, Token) or child.terminal != e.terminal_at(t, q):
                return False
        else:
            cc = e.child_cell(t, q, path[0], path[-1], cell)
            if not well_formed_term(e, cc, child, seen):
                return False
    return True


def well_formed_stack(
    e: ElaboratedGrammar, table: RelationTable, stack: Frame, seen: dict | None = None
) -> bool:
    pending = []
    f, ok = stack, True
    while f is not None:
        if seen is not None:
            hit = seen.get(("stack", id(f)))
            if hit is not None:
                ok = hit[0]
                break
        pending.append(f)
        f = f.prev
    for fr in reversed(pending):
        ok = ok and _well_formed_frame(e, table, fr, seen)
        if seen is not None:
            # a recorded result covers the frame and its whole prefix; the
            # frame ref keeps the id from being recycled
            seen[("stack", id(fr))] = (ok, fr)
    return ok


def _well_formed_frame(e: ElaboratedGrammar, table: RelationTable, f: Frame, seen: dict | None) -> bool:
    prev = f.prev
    if prev is None:
        return f.token.terminal is START and f.link is None
    lk = f.link
    if lk is None or lk.op not in ("<", "="):
        return False
    if (lk.item is None) != (lk.slot is None):
        return False
    if lk.slot is not None and not well_formed_term(e, lk.slot, lk.item, seen):
        return False
    steps = table.steps_from(prev.token.terminal, prev.token.template)
    return any(
        s.op == lk.op
        and s.slot == lk.slot
        and s.dst == f.token.terminal
        and s.dst_template == f.token.template
        and s.dst_pos == f.token.pos
        for s in steps
    )
