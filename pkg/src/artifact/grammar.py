"""Precedence-bounded grammars: sorts, leveled forms, tiles, and molds.

A grammar maps (sort, precedence level) pairs to small regular expressions
over tile literals, sort references, and token classes.  Levels are natural
numbers; higher binds tighter.  Associativity is declared per level.  Every
terminal occurrence in a form gets a mold — (sort, level, position) — which
is how the same token text can name several distinct tiles.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass


class GrammarError(Exception):
    """Raised for malformed grammar sources."""


# ---------------------------------------------------------------------------
# precedence bounds


@dataclass(frozen=True)
class Prec:
    """A precedence bound: bottom, a natural level, or top (waived)."""

    kind: str  # "bot" | "lvl" | "top"
    level: int = 0

    def __str__(self) -> str:
        if self.kind == "bot":
            return "⊥"
        if self.kind == "top":
            return "⊤"
        return str(self.level)

    def ascii(self) -> str:
        if self.kind == "bot":
            return "_|_"
        if self.kind == "top":
            return "^T^"
        return str(self.level)

    def to_json(self) -> object:
        return self.kind if self.kind in ("bot", "top") else self.level


BOT = Prec("bot")
TOP = Prec("top")


def lvl(n: int) -> Prec:
    return Prec("lvl", n)


# ---------------------------------------------------------------------------
# form symbols and regexes


@dataclass(frozen=True)
class LitSym:
    """A literal tile occurrence, e.g. 'let'."""

    text: str


@dataclass(frozen=True)
class ClassSym:
    """A token-class tile occurrence, e.g. $num."""

    name: str


@dataclass(frozen=True)
class SortSym:
    """A child cell of the given sort."""

    sort: str


@dataclass(frozen=True)
class RSym:
    sym: object


@dataclass(frozen=True)
class RSeq:
    parts: tuple


@dataclass(frozen=True)
class RAlt:
    parts: tuple


@dataclass(frozen=True)
class RStar:
    inner: object


@dataclass(frozen=True)
class ROpt:
    inner: object


_FORM_LEXER = re.compile(
    r"\s*(?:'(?P<lit>[^']*)'|\$(?P<cls>[A-Za-z_]\w*)|(?P<sort>[A-Z]\w*)"
    r"|(?P<punct>[()|*?]))"
)


def parse_form(text: str):
    """Parse the form micro-syntax into a regex tree.

    Single-quoted strings are tile literals, capitalized bare names are
    sorts, $name is a token class; `|`, parentheses, `*`, and `?` have their
    usual meaning.
    """
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _FORM_LEXER.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise GrammarError(f"bad form syntax near {text[pos:]!r}")
            break
        pos = m.end()
        if m.group("lit") is not None:
            tokens.append(("lit", m.group("lit")))
        elif m.group("cls") is not None:
            tokens.append(("cls", m.group("cls")))
        elif m.group("sort") is not None:
            tokens.append(("sort", m.group("sort")))
        else:
            tokens.append((m.group("punct"), m.group("punct")))

    idx = 0

    def peek() -> str | None:
        return tokens[idx][0] if idx < len(tokens) else None

    def parse_alt():
        nonlocal idx
        parts = [parse_seq()]
        while peek() == "|":
            idx += 1
            parts.append(parse_seq())
        return parts[0] if len(parts) == 1 else RAlt(tuple(parts))

    def parse_seq():
        nonlocal idx
        parts = []
        while peek() in ("lit", "cls", "sort", "("):
            parts.append(parse_item())
        if not parts:
            raise GrammarError(f"empty alternative in form {text!r}")
        return parts[0] if len(parts) == 1 else RSeq(tuple(parts))

    def parse_item():
        nonlocal idx
        kind, value = tokens[idx]
        idx += 1
        if kind == "lit":
            if not value:
                raise GrammarError(f"empty literal in form {text!r}")
            node = RSym(LitSym(value))
        elif kind == "cls":
            node = RSym(ClassSym(value))
        elif kind == "sort":
            node = RSym(SortSym(value))
        else:  # "("
            node = parse_alt()
            if peek() != ")":
                raise GrammarError(f"unbalanced parentheses in form {text!r}")
            idx += 1
        while peek() in ("*", "?"):
            node = RStar(node) if peek() == "*" else ROpt(node)
            idx += 1
        return node

    node = parse_alt()
    if idx != len(tokens):
        raise GrammarError(f"trailing tokens in form {text!r}")
    return node


# ---------------------------------------------------------------------------
# position automaton (Glushkov construction)


@dataclass(frozen=True)
class FormAutomaton:
    """Position automaton of one form regex.

    Positions are the regex's symbol occurrences in lexical order; their
    indices double as the mold positions of tile occurrences.  fl_pairs
    holds the (first, last) position pairs realizable by some accepted path,
    and reach is the reflexive-transitive closure of follow.
    """

    positions: tuple
    nullable: bool
    first: frozenset
    last: frozenset
    follow: tuple
    fl_pairs: frozenset
    reach: tuple


def compile_form(regex) -> FormAutomaton:
    positions: list = []
    follow: list[set[int]] = []

    def walk(node):
        if isinstance(node, RSym):
            i = len(positions)
            positions.append(node.sym)
            follow.append(set())
            return False, {i}, {i}, {(i, i)}
        if isinstance(node, RSeq):
            nullable, first, last, fl = walk(node.parts[0])
            for part in node.parts[1:]:
                pn, pf, pl, pfl = walk(part)
                for a in last:
                    follow[a] |= pf
                nfl = {(f, l) for f in first for l in pl}
                if pn:
                    nfl |= fl
                if nullable:
                    nfl |= pfl
                first = first | pf if nullable else first
                last = pl | last if pn else pl
                nullable, fl = nullable and pn, nfl
            return nullable, first, last, fl
        if isinstance(node, RAlt):
            nullable, first, last, fl = False, set(), set(), set()
            for part in node.parts:
                pn, pf, pl, pfl = walk(part)
                nullable, first, last, fl = nullable or pn, first | pf, last | pl, fl | pfl
            return nullable, first, last, fl
        if isinstance(node, RStar):
            _, pf, pl, pfl = walk(node.inner)
            for a in pl:
                follow[a] |= pf
            return True, pf, pl, pfl | {(f, l) for f in pf for l in pl}
        if isinstance(node, ROpt):
            _, pf, pl, pfl = walk(node.inner)
            return True, pf, pl, pfl
        raise TypeError(f"not a form regex node: {node!r}")

    nullable, first, last, fl = walk(regex)
    n = len(positions)
    reach = [frozenset()] * n
    for i in range(n):
        seen = {i}
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for k in follow[j]:
                if k not in seen:
                    seen.add(k)
                    frontier.append(k)
        reach[i] = frozenset(seen)
    return FormAutomaton(
        tuple(positions),
        nullable,
        frozenset(first),
        frozenset(last),
        tuple(frozenset(f) for f in follow),
        frozenset(fl),
        tuple(reach),
    )


# ---------------------------------------------------------------------------
# tiles, token classes, level rules


@dataclass(frozen=True)
class TileDef:
    """One terminal occurrence in the grammar, identified by its mold."""

    label: str  # literal text, or the class name when is_class
    is_class: bool
    sort: str
    level: int
    form_index: int
    position: int

    @property
    def mold(self) -> tuple[str, int, int]:
        return (self.sort, self.level, self.position)

    def __str__(self) -> str:
        tag = f"${self.label}" if self.is_class else self.label
        return f"{tag}@{self.sort}.{self.level}.{self.position}"


@dataclass(frozen=True)
class TokenClass:
    name: str
    pattern: str

    def matches(self, text: str) -> bool:
        return re.fullmatch(self.pattern, text) is not None


@dataclass(frozen=True)
class LevelRule:
    assoc: str | None  # "left" | "right" | None
    forms: tuple  # regex trees, one per declared form
    automata: tuple  # FormAutomaton per form


@dataclass(frozen=True)
class Violation:
    rule: str  # "root" | "closure" | "operator-form" | "unique-tiles"
    message: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.message}"


# ---------------------------------------------------------------------------
# the grammar


class PBG:
    """A precedence-bounded grammar with molds assigned."""

    def __init__(self, root: str, rules: dict, token_classes: dict):
        self.root = root
        self.rules: dict[str, dict[int, LevelRule]] = rules
        self.token_classes: dict[str, TokenClass] = token_classes
        tiles = []
        for sort in sorted(rules):
            for level in sorted(rules[sort]):
                rule = rules[sort][level]
                for fi, auto in enumerate(rule.automata):
                    for pos, sym in enumerate(auto.positions):
                        if isinstance(sym, LitSym):
                            tiles.append(TileDef(sym.text, False, sort, level, fi, pos))
                        elif isinstance(sym, ClassSym):
                            tiles.append(TileDef(sym.name, True, sort, level, fi, pos))
        self.tiles: tuple[TileDef, ...] = tuple(tiles)
        self._by_label: dict[str, list[TileDef]] = {}
        for t in self.tiles:
            if not t.is_class:
                self._by_label.setdefault(t.label, []).append(t)
        self._class_tiles = [t for t in self.tiles if t.is_class]

    # -- lookup ------------------------------------------------------------

    def sorts(self) -> list[str]:
        return sorted(self.rules)

    def levels(self, sort: str) -> list[int]:
        return sorted(self.rules[sort])

    def rule(self, sort: str, level: int) -> LevelRule:
        return self.rules[sort][level]

    def assoc(self, sort: str, level: int) -> str | None:
        rule = self.rules.get(sort, {}).get(level)
        return rule.assoc if rule else None

    def literal_tiles(self, text: str) -> list[TileDef]:
        return list(self._by_label.get(text, ()))

    def class_tiles(self, text: str) -> list[TileDef]:
        return [
            t
            for t in self._class_tiles
            if self.token_classes[t.label].matches(text)
        ]

    def tile_at(self, sort: str, level: int, form_index: int, position: int) -> TileDef:
        auto = self.rules[sort][level].automata[form_index]
        sym = auto.positions[position]
        if isinstance(sym, LitSym):
            return TileDef(sym.text, False, sort, level, form_index, position)
        if isinstance(sym, ClassSym):
            return TileDef(sym.name, True, sort, level, form_index, position)
        raise ValueError(f"position {position} is not a tile")

    # -- the two comparison families ----------------------------------------

    def lt(self, sort: str, a: Prec, b: Prec) -> bool:
        """Strict, associativity-aware a ≺_sort b.

        Naturals compare by <; p ≺ p holds exactly for right-associative
        levels; ⊥ is below everything else and ⊤ above everything else,
        but neither relates to itself.
        """
        if a == b:
            return a.kind == "lvl" and self.assoc(sort, a.level) == "right"
        if b.kind == "top":
            return True
        if a.kind == "bot":
            return True
        if a.kind == "top" or b.kind == "bot":
            return False
        return a.level < b.level

    def gt(self, sort: str, a: Prec, b: Prec) -> bool:
        """Strict, associativity-aware a ≻_sort b (p ≻ p iff left-assoc)."""
        if a == b:
            return a.kind == "lvl" and self.assoc(sort, a.level) == "left"
        if a.kind == "top":
            return True
        if b.kind == "top":
            return False
        if b.kind == "bot":
            return True
        if a.kind == "bot":
            return False
        return a.level > b.level

    def le(self, sort: str, a: Prec, b: Prec) -> bool:
        """Reflexive a ≼_sort b, used when analyzing a finished term
        against a cell (admission), as opposed to producing new structure."""
        return a == b or self.lt(sort, a, b)

    def ge(self, sort: str, a: Prec, b: Prec) -> bool:
        return a == b or self.gt(sort, a, b)


# ---------------------------------------------------------------------------
# loading and validation


def infer_molds(data: dict) -> PBG:
    """Build a PBG from parsed grammar data, assigning molds to every
    terminal occurrence by (sort, level, lexical position)."""
    if not isinstance(data, dict):
        raise GrammarError("grammar must be a JSON object")
    sorts_obj = data.get("sorts")
    if not isinstance(sorts_obj, dict) or not sorts_obj:
        raise GrammarError("no root sort: the sorts object is missing or empty")
    root = data.get("root")
    if root not in sorts_obj:
        raise GrammarError(f"no root sort: {root!r} is not a declared sort")
    classes = {}
    for name, pattern in (data.get("token_classes") or {}).items():
        try:
            re.compile(pattern)
        except re.error as exc:
            raise GrammarError(f"bad pattern for token class {name}: {exc}") from exc
        classes[name] = TokenClass(name, pattern)
    rules: dict[str, dict[int, LevelRule]] = {}
    for sort, levels in sorts_obj.items():
        rules[sort] = {}
        for entry in levels:
            prec = entry.get("prec")
            if not isinstance(prec, int) or prec < 0:
                raise GrammarError(f"bad prec {prec!r} in sort {sort}")
            if prec in rules[sort]:
                raise GrammarError(f"duplicate prec entries for ({sort}, {prec})")
            assoc = entry.get("assoc")
            if assoc not in (None, "left", "right"):
                raise GrammarError(f"bad assoc {assoc!r} in ({sort}, {prec})")
            forms = tuple(parse_form(f) for f in entry.get("forms", ()))
            if not forms:
                raise GrammarError(f"no forms in ({sort}, {prec})")
            rules[sort][prec] = LevelRule(assoc, forms, tuple(compile_form(f) for f in forms))
    for sort, levels in rules.items():
        for level, rule in levels.items():
            for auto in rule.automata:
                for sym in auto.positions:
                    if isinstance(sym, SortSym) and sym.sort not in rules:
                        raise GrammarError(
                            f"unknown sort {sym.sort} in a ({sort}, {level}) form"
                        )
                    if isinstance(sym, ClassSym) and sym.name not in classes:
                        raise GrammarError(
                            f"unknown token class ${sym.name} in a ({sort}, {level}) form"
                        )
    return PBG(root, rules, classes)


def load_grammar(text: str) -> PBG:
    """Load a grammar from its JSON source text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GrammarError(f"grammar is not valid JSON: {exc}") from exc
    return infer_molds(data)


def validate(g: PBG) -> list[Violation]:
    """Check operator form, unique tiles, root presence, and symbol closure.

    Returns an empty list when the grammar is usable.
    """
    out: list[Violation] = []
    if g.root not in g.rules:
        out.append(Violation("root", f"root sort {g.root!r} is not declared"))
    for sort in g.sorts():
        for level in g.levels(sort):
            rule = g.rule(sort, level)
            for fi, auto in enumerate(rule.automata):
                where = f"({sort}, {level}, form {fi})"
                for sym in auto.positions:
                    if isinstance(sym, SortSym) and sym.sort not in g.rules:
                        out.append(Violation("closure", f"unknown sort {sym.sort} in {where}"))
                    if isinstance(sym, ClassSym) and sym.name not in g.token_classes:
                        out.append(
                            Violation("closure", f"unknown token class ${sym.name} in {where}")
                        )
                if auto.nullable:
                    out.append(Violation("operator-form", f"{where} derives the empty form"))
                for i, sym in enumerate(auto.positions):
                    if not isinstance(sym, SortSym):
                        continue
                    for j in auto.follow[i]:
                        if isinstance(auto.positions[j], SortSym):
                            out.append(
                                Violation(
                                    "operator-form",
                                    f"{where} places two sorts adjacently "
                                    f"({sym.sort} {auto.positions[j].sort})",
                                )
                            )
                for f, l in sorted(auto.fl_pairs):
                    if f == l and isinstance(auto.positions[f], SortSym) and not auto.follow[f]:
                        out.append(
                            Violation(
                                "operator-form",
                                f"{where} derives a bare sort ({auto.positions[f].sort})",
                            )
                        )
    seen: dict[tuple, TileDef] = {}
    for t in g.tiles:
        key = (t.label, t.is_class, t.sort, t.level, t.position)
        if key in seen and seen[key].form_index != t.form_index:
            out.append(
                Violation(
                    "unique-tiles",
                    f"tile {t.label!r} with mold {t.mold} occurs in forms "
                    f"{seen[key].form_index} and {t.form_index}",
                )
            )
        seen[key] = t
    return out


def enumerate_forms(g: PBG, sort: str, level: int, max_len: int = 8) -> set:
    """The (length-bounded) language of the (sort, level) rule: a set of
    symbol tuples."""
    if sort not in g.rules or level not in g.rules[sort]:
        raise ValueError(f"no rule for ({sort}, {level})")

    def lang(node, budget: int) -> set:
        if isinstance(node, RSym):
            return {(node.sym,)} if budget >= 1 else set()
        if isinstance(node, RSeq):
            acc = {()}
            for part in node.parts:
                nxt = set()
                for prefix in acc:
                    for tail in lang(part, budget - len(prefix)):
                        if len(prefix) + len(tail) <= budget:
                            nxt.add(prefix + tail)
                acc = nxt
            return acc
        if isinstance(node, RAlt):
            out = set()
            for part in node.parts:
                out |= lang(part, budget)
            return out
        if isinstance(node, RStar):
            acc = {()}
            grown = {()}
            while grown:
                nxt = set()
                for prefix in grown:
                    for tail in lang(node.inner, budget - len(prefix)):
                        cand = prefix + tail
                        if tail and len(cand) <= budget and cand not in acc:
                            nxt.add(cand)
                acc |= nxt
                grown = nxt
            return acc
        if isinstance(node, ROpt):
            return {()} | lang(node.inner, budget)
        raise TypeError(f"not a form regex node: {node!r}")

    out = set()
    for form in g.rules[sort][level].forms:
        out |= {f for f in lang(form, max_len) if f}
    return out


# ---------------------------------------------------------------------------
# the built-in grammar

HAZEL_JSON = """
{
  "root": "E",
  "token_classes": {
    "num": "[0-9]+",
    "id": "[a-z][a-zA-Z0-9_]*"
  },
  "sorts": {
    "E": [
      {"prec": 0, "assoc": "right",
       "forms": ["'let' P '=' E 'in' E", "'fun' P '=>' E",
                  "'if' E 'then' E 'else' E", "E ',' E"]},
      {"prec": 1, "assoc": "left", "forms": ["E '+' E", "E '-' E"]},
      {"prec": 2, "assoc": "left", "forms": ["E '*' E"]},
      {"prec": 3, "assoc": null, "forms": ["'-' E"]},
      {"prec": 4, "assoc": null, "forms": ["'(' E ')'", "$num", "$id"]}
    ],
    "P": [
      {"prec": 0, "assoc": "right", "forms": ["P ',' P"]},
      {"prec": 1, "assoc": null, "forms": ["P ':' T"]},
      {"prec": 2, "assoc": null, "forms": ["'(' P ')'", "$id"]}
    ],
    "T": [
      {"prec": 0, "assoc": "right", "forms": ["T '->' T"]},
      {"prec": 1, "assoc": null, "forms": ["'(' T ')'", "$id"]}
    ]
  }
}
"""


def builtin_hazel() -> PBG:
    """The built-in expression/pattern/type grammar used by the CLI and
    the test corpus."""
    return load_grammar(HAZEL_JSON)
