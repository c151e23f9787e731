"""Token-to-tile molding.

A lexed token's text may match several tiles across sorts and levels (the
same label can open an expression, a pattern, or a type).  The molder pushes
each candidate through the parse machine on the actual stack, measures the
obligation delta each choice would cause, and keeps the lexicographic
minimum — fewest infix grout, then sort-transition grout, then ghosts, then
operand grout; ties fall to the shortest walk and then to a fixed key.
Tokens matching nothing stay unmolded and never touch the structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .grammar import PBG, TileDef
from .parser import ObligationCount, Parser, Token, obligations


@dataclass(frozen=True)
class ObligationDelta:
    """Change in outstanding material caused by one push: inserted − removed
    per weight class."""

    infix_grout: int = 0
    sort_grout: int = 0
    ghosts: int = 0
    operand_grout: int = 0

    @classmethod
    def between(cls, after: ObligationCount, before: ObligationCount) -> "ObligationDelta":
        d = after - before
        return cls(d.infix, d.sort, d.ghost, d.operand)

    def weight(self) -> tuple:
        return (self.infix_grout, self.sort_grout, self.ghosts, self.operand_grout)

    def is_zero(self) -> bool:
        return self.weight() == (0, 0, 0, 0)

    def as_dict(self) -> dict:
        return {
            "ghosts": self.ghosts,
            "infix_grout": self.infix_grout,
            "operand_grout": self.operand_grout,
            "sort_grout": self.sort_grout,
        }

    def __lt__(self, other: "ObligationDelta") -> bool:
        return self.weight() < other.weight()


@dataclass(frozen=True)
class MoldChoice:
    tile: TileDef | None  # None = unmolded
    plan: tuple  # push actions taken for the chosen mold
    delta: ObligationDelta
    after: object = None  # stack after the winning push, or None for unmolded


class Machinery:
    """Per-grammar parse machinery shared by molding calls: the parser (with
    its elaboration and relation table) plus the map from each tile to its
    defining terminal occurrence."""

    def __init__(self, g: PBG):
        self.g = g
        self.parser = Parser(g)
        self.elab = self.parser.e
        self.table = self.parser.table
        self.occurrence: dict[TileDef, tuple] = {}
        for t in self.elab.templates:
            if t.kind != "tile":
                continue
            for pos in range(len(t.auto.positions)):
                term = self.elab.terminal_at(t, pos)
                if term is not None and term.kind == "tile":
                    self.occurrence[term.tile] = (term, t.key, pos)

    def token_for(self, tile: TileDef, text: str) -> Token:
        term, template, pos = self.occurrence[tile]
        return Token(term, text, False, template, pos)


_MACHINERY: dict[int, Machinery] = {}


def machinery(g: PBG) -> Machinery:
    m = _MACHINERY.get(id(g))
    if m is None or m.g is not g:
        m = Machinery(g)
        if len(_MACHINERY) > 8:
            _MACHINERY.clear()
        _MACHINERY[id(g)] = m
    return m


# ---------------------------------------------------------------------------
# candidates and choice


def candidates(g: PBG, text: str) -> list[TileDef]:
    """All tiles the token text can be molded as, in deterministic key
    order.  A literal label match preempts token-class matches — reserved
    words shadow identifiers, so "let" is only ever the keyword."""
    lits = sorted(g.literal_tiles(text), key=lambda t: (t.sort, t.level, t.form_index, t.position))
    if lits:
        return lits
    return sorted(g.class_tiles(text), key=lambda t: (t.sort, t.level, t.form_index, t.position))


def choose(g: PBG, k, rs, text: str, audit: list | None = None) -> MoldChoice:
    """Push every candidate mold of the token on the stack and keep the one
    whose obligation delta is lexicographically least; ties break by walk
    height, walk length, then candidate order.  Unmolded text is a no-op.
    When given, audit collects every candidate's delta."""
    cands = candidates(g, text)
    if not cands:
        return MoldChoice(None, (), ObligationDelta())
    m = machinery(g)
    before = obligations(k)
    for item in rs:
        before = before + obligations(item)
    best = None
    for tile in cands:
        tok = m.token_for(tile, text)
        trace: list = []
        after_stack = m.parser.push(k, list(rs), tok, trace=trace)
        delta = ObligationDelta.between(obligations(after_stack), before)
        shift = trace[-1]
        term, _, _ = m.occurrence[tile]
        rank = (delta.weight(), shift["height"], shift["length"], term.key())
        if audit is not None:
            audit.append({"mold": str(tile), "delta": delta.as_dict()})
        if best is None or rank < best[0]:
            best = (rank, tile, tuple(trace), delta, after_stack)
    _, tile, plan, delta, after = best
    return MoldChoice(tile, plan, delta, after)


# ---------------------------------------------------------------------------
# lexing


@dataclass(frozen=True)
class LexToken:
    text: str
    kind: str  # "token" | "space" | "newline" | "unknown"


def lex(g: PBG, text: str) -> list[LexToken]:
    """Maximal-munch lexing over the grammar's tile labels and token-class
    patterns.  Whitespace separates tokens; characters that begin no known
    token come out one at a time as unknown."""
    labels = sorted({t.label for t in g.tiles if not t.is_class}, key=len, reverse=True)
    out: list[LexToken] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            out.append(LexToken("\n", "newline"))
            i += 1
            continue
        if c.isspace():
            j = i
            while j < len(text) and text[j].isspace() and text[j] != "\n":
                j += 1
            out.append(LexToken(text[i:j], "space"))
            i = j
            continue
        match = ""
        for label in labels:
            if text.startswith(label, i) and len(label) > len(match):
                match = label
        for cls in g.token_classes.values():
            hit = _class_prefix(cls.pattern, text, i)
            if hit and len(hit) > len(match):
                match = hit
        if match:
            out.append(LexToken(match, "token"))
            i += len(match)
        else:
            out.append(LexToken(c, "unknown"))
            i += 1
    return out


def _class_prefix(pattern: str, text: str, start: int):
    m = re.compile(pattern).match(text, start)
    return m.group(0) if m else None
