"""Elaboration of a precedence-bounded grammar into a bounded-sort CFG.

Nonterminals are bounded sorts ⟨p s q⟩: sort s restricted to levels between
p and q.  Tile forms become productions guarded by their edge levels, and
four families of grout productions are injected so that every cell can
always make progress: operand holes ⬚, infix chains ⟐, and prefix/postfix
sort transitions ⦊/⦉.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .grammar import (
    BOT,
    TOP,
    ClassSym,
    FormAutomaton,
    LitSym,
    PBG,
    Prec,
    RSeq,
    RStar,
    RSym,
    SortSym,
    TileDef,
    compile_form,
    lvl,
)

OPERAND, INFIX, PREFIX, POSTFIX = "operand", "infix", "prefix", "postfix"

GROUT_TIPS = {
    OPERAND: ("convex", "convex"),
    INFIX: ("concave", "concave"),
    PREFIX: ("convex", "concave"),
    POSTFIX: ("concave", "convex"),
}

GROUT_GLYPH = {OPERAND: "⬚", INFIX: "⟐", PREFIX: "⦊", POSTFIX: "⦉"}
GROUT_ASCII = {OPERAND: "_", INFIX: "<>", PREFIX: ">>", POSTFIX: "<<"}


@dataclass(frozen=True)
class BoundedSort:
    """The nonterminal ⟨left sort right⟩."""

    left: Prec
    sort: str
    right: Prec

    def __str__(self) -> str:
        return f"⟨{self.left} {self.sort} {self.right}⟩"

    def ascii(self) -> str:
        return f"<{self.left.ascii()} {self.sort} {self.right.ascii()}>"

    def key(self) -> tuple:
        k = self.__dict__.get("_key")
        if k is None:
            k = (self.sort, _prec_key(self.left), _prec_key(self.right))
            object.__setattr__(self, "_key", k)
        return k


_PREC_ORDER = {"bot": 0, "lvl": 1, "top": 2}


def _prec_key(p: Prec) -> tuple:
    return (_PREC_ORDER[p.kind], p.level)


def cell(left: Prec, sort: str, right: Prec) -> BoundedSort:
    return BoundedSort(left, sort, right)


def unbounded(sort: str) -> BoundedSort:
    return BoundedSort(BOT, sort, BOT)


@dataclass(frozen=True)
class Terminal:
    """A terminal of the elaborated grammar: a tile occurrence, a grout
    glyph, or one of the two stream delimiters."""

    kind: str  # "start" | "end" | "tile" | "grout"
    tile: TileDef | None = None
    shape: str | None = None
    grout_sort: str | None = None

    @property
    def sort(self) -> str | None:
        if self.kind == "tile":
            return self.tile.sort
        return self.grout_sort

    def __str__(self) -> str:
        if self.kind == "start":
            return "START"
        if self.kind == "end":
            return "END"
        if self.kind == "tile":
            return str(self.tile)
        return f"{GROUT_GLYPH[self.shape]}:{self.grout_sort}"

    def key(self) -> tuple:
        k = self.__dict__.get("_key")
        if k is None:
            if self.kind == "tile":
                t = self.tile
                # literal tiles order before token-class tiles so that exact
                # keyword molds win deterministic tie-breaks over class molds
                k = (2, 1 if t.is_class else 0, t.sort, t.level, t.form_index, t.position, t.label)
            elif self.kind == "grout":
                order = {OPERAND: 0, INFIX: 1, PREFIX: 2, POSTFIX: 3}
                k = (3, 0, self.grout_sort, order[self.shape], 0, 0, "")
            else:
                k = (0 if self.kind == "start" else 1, 0, "", 0, 0, 0, "")
            object.__setattr__(self, "_key", k)
        return k


START = Terminal("start")
END = Terminal("end")


def tile_terminal(tile: TileDef) -> Terminal:
    return Terminal("tile", tile=tile)


def grout_terminal(shape: str, sort: str) -> Terminal:
    return Terminal("grout", shape=shape, grout_sort=sort)


@dataclass(frozen=True)
class _GroutSym:
    """An automaton position holding a grout terminal."""

    terminal: Terminal


@dataclass(frozen=True)
class Template:
    """One production schema: a form automaton with its producer metadata.

    kind "tile" templates carry (sort, level, form_index); grout templates
    carry their shape; "root" is the internal START ŝ END production.
    """

    key: str
    kind: str  # "tile" | "operand" | "chain" | "prefix" | "postfix" | "root"
    sort: str
    level: int
    form_index: int
    auto: FormAutomaton
    child_sort: str | None = None  # prefix/postfix transition target

    def terminal_at(self, pos: int) -> Terminal | None:
        sym = self.auto.positions[pos]
        if isinstance(sym, SortSym):
            return None
        if isinstance(sym, _GroutSym):
            return sym.terminal
        if isinstance(sym, LitSym):
            return tile_terminal(TileDef(sym.text, False, self.sort, self.level, self.form_index, pos))
        if isinstance(sym, ClassSym):
            return tile_terminal(TileDef(sym.name, True, self.sort, self.level, self.form_index, pos))
        raise TypeError(sym)

    def sort_at(self, pos: int) -> str | None:
        sym = self.auto.positions[pos]
        return sym.sort if isinstance(sym, SortSym) else None


@dataclass(frozen=True)
class Production:
    """A concrete production: producer cell and product symbol string."""

    producer: BoundedSort
    product: tuple  # Terminal | BoundedSort items
    template_key: str

    def render(self, ascii_mode: bool = False) -> str:
        parts = []
        for item in self.product:
            if isinstance(item, BoundedSort):
                parts.append(item.ascii() if ascii_mode else str(item))
            elif item.kind == "grout":
                tag = {OPERAND: "HOLE", INFIX: "INFIX", PREFIX: "PRE", POSTFIX: "POST"}[item.shape]
                parts.append(f"{tag}:{item.grout_sort}")
            elif item.kind == "tile":
                t = item.tile
                parts.append(f"${t.label}" if t.is_class else f"'{t.label}'")
            else:
                parts.append(str(item))
        producer = self.producer.ascii() if ascii_mode else str(self.producer)
        return f"{producer} -> {' '.join(parts)}"


class ElaboratedGrammar:
    """A PBG together with its grout-injected bounded-sort CFG view."""

    def __init__(self, g: PBG):
        self.g = g
        self.templates: list[Template] = []
        self._tile_templates: dict[tuple[str, int, int], Template] = {}
        for sort in g.sorts():
            for level in g.levels(sort):
                rule = g.rule(sort, level)
                for fi, auto in enumerate(rule.automata):
                    t = Template(f"{sort}/{level}/{fi}", "tile", sort, level, fi, auto)
                    self.templates.append(t)
                    self._tile_templates[(sort, level, fi)] = t
        # sort graph over tile forms: edge r -> s when an r-form has an s child
        self._children_of: dict[str, set[str]] = {s: set() for s in g.sorts()}
        for t in self.templates:
            for sym in t.auto.positions:
                if isinstance(sym, SortSym) and sym.sort != t.sort:
                    self._children_of[t.sort].add(sym.sort)
        self._grout_templates: dict[str, list[Template]] = {}
        for sort in g.sorts():
            grout = [self._make_grout(OPERAND, sort, None), self._make_grout(INFIX, sort, None)]
            for other in g.sorts():
                if other != sort:
                    grout.append(self._make_grout(PREFIX, sort, other))
            for host in g.sorts():
                if host != sort and sort in self._children_of[host]:
                    grout.append(self._make_grout(POSTFIX, sort, host))
            self._grout_templates[sort] = grout
            self.templates.extend(grout)
        root_auto = compile_form(
            RSeq((RSym(_GroutSym(START)), RSym(SortSym(g.root)), RSym(_GroutSym(END))))
        )
        self.root_template = Template("root", "root", g.root, 0, -1, root_auto)
        self.root_cell = unbounded(g.root)
        self.templates.append(self.root_template)
        self.by_key: dict[str, Template] = {t.key: t for t in self.templates}
        self._terminals: dict[tuple, Terminal] = {}
        self._templates_for_cache: dict[BoundedSort, list] = {}

    def _make_grout(self, shape: str, sort: str, other: str | None) -> Template:
        term = grout_terminal(shape, sort)
        if shape == OPERAND:
            regex = RSym(_GroutSym(term))
            key = f"grout/{sort}/operand"
        elif shape == INFIX:
            regex = RSeq(
                (
                    RSym(SortSym(sort)),
                    RSym(_GroutSym(term)),
                    RSym(SortSym(sort)),
                    RStar(RSeq((RSym(_GroutSym(term)), RSym(SortSym(sort))))),
                )
            )
            key = f"grout/{sort}/chain"
        elif shape == PREFIX:
            regex = RSeq((RSym(_GroutSym(term)), RSym(SortSym(other))))
            key = f"grout/{sort}/prefix/{other}"
        else:
            regex = RSeq((RSym(SortSym(other)), RSym(_GroutSym(term))))
            key = f"grout/{sort}/postfix/{other}"
        return Template(key, "chain" if shape == INFIX else shape, sort, 0, -1, compile_form(regex), other)

    # -- producer guards and admissibility -----------------------------------

    def guards(self, t: Template, f: int, l: int) -> tuple[Prec, Prec]:
        """The exposed edge levels of a tile template along path (f, l):
        the level where the edge is a self-sort child, ⊤ (waived) where it
        is a tile or a foreign child."""
        left = lvl(t.level) if t.sort_at(f) == t.sort else TOP
        right = lvl(t.level) if t.sort_at(l) == t.sort else TOP
        return left, right

    def fl_pairs(self, t: Template, n: BoundedSort) -> list[tuple[int, int]]:
        """The (first, last) paths of template t producible in cell n."""
        if t.kind == "root":
            return []
        if t.sort != n.sort:
            return []
        if t.kind == "operand":
            return sorted(t.auto.fl_pairs)
        if t.kind in ("chain", "prefix", "postfix"):
            if n.left == BOT and n.right == BOT:
                return sorted(t.auto.fl_pairs)
            return []
        out = []
        for f, l in sorted(t.auto.fl_pairs):
            gl, gr = self.guards(t, f, l)
            if self.g.lt(t.sort, n.left, gl) and self.g.gt(t.sort, gr, n.right):
                out.append((f, l))
        return out

    def templates_for(self, n: BoundedSort) -> list[tuple[Template, list[tuple[int, int]]]]:
        cached = self._templates_for_cache.get(n)
        if cached is None:
            cached = []
            for t in self._tile_list(n.sort) + self._grout_templates.get(n.sort, []):
                fls = self.fl_pairs(t, n)
                if fls:
                    cached.append((t, fls))
            self._templates_for_cache[n] = cached
        return cached

    def _tile_list(self, sort: str) -> list[Template]:
        if sort not in self.g.rules:
            return []
        return [
            self._tile_templates[(sort, level, fi)]
            for level in self.g.levels(sort)
            for fi in range(len(self.g.rule(sort, level).automata))
        ]

    def child_cell(self, t: Template, pos: int, f: int, l: int, outer: BoundedSort) -> BoundedSort:
        """Bounds of the child cell at a sort position, given the path ends
        and the producing cell: leading/trailing self-sort children inherit
        the outer bound on their open side and the template level on the
        inner side; all other children are unbounded."""
        child = t.sort_at(pos)
        if t.kind == "chain":
            return BoundedSort(lvl(0), child, lvl(0))
        if t.kind in ("prefix", "postfix", "root"):
            return unbounded(child)
        if child == t.sort and pos == f:
            return BoundedSort(outer.left, child, lvl(t.level))
        if child == t.sort and pos == l:
            return BoundedSort(lvl(t.level), child, outer.right)
        return unbounded(child)

    def synth(self, t: Template, f: int, l: int) -> tuple[Prec, Prec]:
        """Bounds a finished term of this template exposes for admission:
        tile templates expose their guards; grout operators expose the grout
        level 0 on self-sort edges and ⊤ elsewhere."""
        if t.kind == "tile":
            return self.guards(t, f, l)
        if t.kind == "chain":
            return lvl(0), lvl(0)
        return TOP, TOP

    def analyzes(self, n: BoundedSort, sort: str, synth: tuple[Prec, Prec]) -> bool:
        """Whether a finished term of the given sort and synthesized bounds
        may inhabit cell n (reflexive comparisons; production uses strict)."""
        return (
            sort == n.sort
            and self.g.le(n.sort, n.left, synth[0])
            and self.g.ge(n.sort, synth[1], n.right)
        )

    # -- reachability ---------------------------------------------------------

    @lru_cache(maxsize=None)
    def _reachable(self) -> frozenset:
        seen = {self.root_cell}
        frontier = [self.root_cell]
        while frontier:
            n = frontier.pop()
            for t, fls in self.templates_for(n):
                for f, l in fls:
                    for pos in self._path_positions(t, f, l):
                        if t.sort_at(pos) is None:
                            continue
                        child = self.child_cell(t, pos, f, l, n)
                        if child not in seen:
                            seen.add(child)
                            frontier.append(child)
        return frozenset(seen)

    def reachable_cells(self) -> list[BoundedSort]:
        return sorted(self._reachable(), key=BoundedSort.key)

    @staticmethod
    def _path_positions(t: Template, f: int, l: int) -> list[int]:
        return sorted(p for p in t.auto.reach[f] if l in t.auto.reach[p])

    # -- concrete productions -------------------------------------------------

    def _paths(self, t: Template, f: int, l: int, max_len: int) -> list[tuple[int, ...]]:
        out = []

        def grow(path: tuple[int, ...]) -> None:
            here = path[-1]
            if here == l:
                out.append(path)
            if len(path) >= max_len:
                return
            for nxt in sorted(t.auto.follow[here]):
                if l in t.auto.reach[nxt]:
                    grow(path + (nxt,))

        grow((f,))
        return sorted(out, key=lambda p: (len(p), p))

    def production_for_path(
        self, t: Template, path: tuple[int, ...], outer: BoundedSort
    ) -> Production:
        f, l = path[0], path[-1]
        product = []
        for pos in path:
            term = self.terminal_at(t, pos)
            product.append(term if term is not None else self.child_cell(t, pos, f, l, outer))
        return Production(outer, tuple(product), t.key)

    def terminal_at(self, t: Template, pos: int) -> Terminal | None:
        key = (t.key, pos)
        if key not in self._terminals:
            self._terminals[key] = t.terminal_at(pos)
        return self._terminals[key]


def elaborate(g: PBG) -> ElaboratedGrammar:
    return ElaboratedGrammar(g)


# ---------------------------------------------------------------------------
# module-level query API


def produces(g: ElaboratedGrammar, n: BoundedSort, max_len: int = 10):
    """Iterate the tile productions of cell n (finite view: concrete paths
    up to max_len symbols)."""
    for t, fls in g.templates_for(n):
        if t.kind != "tile":
            continue
        for f, l in fls:
            for path in g._paths(t, f, l, max_len):
                yield g.production_for_path(t, path, n)


def inject_grout(g: ElaboratedGrammar, n: BoundedSort, max_len: int = 10):
    """Iterate all productions of cell n including the injected grout
    (chains are rendered by their shortest, two-child instance)."""
    yield from produces(g, n, max_len)
    for t, fls in g.templates_for(n):
        if t.kind == "tile":
            continue
        for f, l in fls:
            paths = g._paths(t, f, l, max_len=5)
            if paths:
                yield g.production_for_path(t, paths[0], n)
                break


def reduce_form(g: ElaboratedGrammar, sort: str, level: int, form: tuple) -> Production:
    """The production a concrete form (a symbol tuple from enumerate_forms)
    reduces to: producer bounds are the form's exposed edge levels (⊤ where
    waived) and child cells carry the canonical bounds."""
    if sort not in g.g.rules or level not in g.g.rules[sort]:
        raise ValueError(f"no rule for ({sort}, {level})")
    rule = g.g.rule(sort, level)
    for fi in range(len(rule.automata)):
        t = g._tile_templates[(sort, level, fi)]
        path = _match_path(t.auto, form)
        if path is None:
            continue
        f, l = path[0], path[-1]
        gl, gr = g.guards(t, f, l)
        producer = BoundedSort(gl, sort, gr)
        prod = g.production_for_path(t, path, unbounded(sort))
        return Production(producer, prod.product, t.key)
    raise ValueError(f"form {form!r} is not in the ({sort}, {level}) language")


def _match_path(auto: FormAutomaton, form: tuple) -> tuple[int, ...] | None:
    if not form:
        return None
    starts = [p for p in auto.first if auto.positions[p] == form[0]]
    frontier = [(p,) for p in starts]
    for sym in form[1:]:
        nxt = []
        for path in frontier:
            for q in auto.follow[path[-1]]:
                if auto.positions[q] == sym:
                    nxt.append(path + (q,))
        frontier = nxt
    for path in sorted(frontier):
        if path[-1] in auto.last:
            return path
    return None


def derives_leftmost(g: ElaboratedGrammar, a: BoundedSort, b: BoundedSort) -> bool:
    """Whether cell a reaches cell b through leftmost-child steps in the
    grout-injected grammar (reflexive)."""
    seen = {a}
    frontier = [a]
    while frontier:
        n = frontier.pop()
        if n == b:
            return True
        for t, fls in g.templates_for(n):
            for f, l in fls:
                if t.sort_at(f) is None:
                    continue
                child = g.child_cell(t, f, f, l, n)
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
    return b in seen


def dump_cfg(g: ElaboratedGrammar, max_len: int = 8, ascii_mode: bool = False) -> str:
    """Human-readable listing of the injected CFG over reachable cells."""
    lines = []
    for n in g.reachable_cells():
        for prod in inject_grout(g, n, max_len=max_len):
            lines.append(prod.render(ascii_mode))
    return "\n".join(lines)
