"""Slot-annotated precedence relations and grammar walks.

The table holds entries τ_L op τ_R with op ∈ {⋖, ≐, ⋗} and a slot: the cell
that separates the two terminals on a stack (None when they can sit flush).
≐ relates terminals of one production; ⋖ descends into the leading edge of
the cell after τ_L; ⋗ mirrors it on trailing edges.  Entries record the
right terminal's template and position so that pushed tokens know exactly
which production occurrence they instantiate.

Walks are ⋖/≐ chains between terminals.  They are searched shortest-first,
and walks whose interior ≐-runs consist of tiles are dropped in favor of
grout-backed alternatives (the runs touching the walk's endpoints are
exempt); the drop is a preference, so searches can be rerun without it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .elaboration import (
    END,
    INFIX,
    OPERAND,
    START,
    BoundedSort,
    ElaboratedGrammar,
    Template,
    Terminal,
    unbounded,
)
from .grammar import TileDef, lvl


@dataclass(frozen=True)
class RelEntry:
    left: Terminal
    left_template: str
    op: str  # "<" | "=" | ">"
    slot: BoundedSort | None
    right: Terminal
    right_template: str
    right_pos: int
    slot_pos: int | None = None  # the slot's position in right_template

    def key(self) -> tuple:
        return (
            self.left.key(),
            self.op,
            self.slot.key() if self.slot else (),
            self.right.key(),
            self.right_template,
            self.right_pos,
        )

    def render(self, ascii_mode: bool = False) -> str:
        glyph = {"<": "⋖", "=": "≐", ">": "⋗"}[self.op] if not ascii_mode else self.op
        slot = "-" if self.slot is None else (self.slot.ascii() if ascii_mode else str(self.slot))
        return f"{self.left}\t{glyph}\t{slot}\t{self.right}"


@dataclass(frozen=True)
class RelStep:
    op: str  # "<" | "="
    slot: BoundedSort | None
    dst: Terminal
    dst_template: str
    dst_pos: int
    slot_pos: int | None = None

    def key(self) -> tuple:
        k = self.__dict__.get("_key")
        if k is None:
            k = (
                self.op,
                self.slot.key() if self.slot else (),
                self.dst.key(),
                self.dst_template,
                self.dst_pos,
                -1 if self.slot_pos is None else self.slot_pos,
            )
            object.__setattr__(self, "_key", k)
        return k


@dataclass(frozen=True)
class Walk:
    src: Terminal
    steps: tuple[RelStep, ...]

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def height(self) -> int:
        return sum(1 for s in self.steps if s.op == "<")

    @property
    def dst(self) -> Terminal:
        return self.steps[-1].dst

    def key(self) -> tuple:
        k = self.__dict__.get("_key")
        if k is None:
            k = (self.height, self.length, tuple(s.key() for s in self.steps))
            object.__setattr__(self, "_key", k)
        return k

    def __str__(self) -> str:
        parts = [str(self.src)]
        for s in self.steps:
            glyph = "⋖" if s.op == "<" else "≐"
            slot = "" if s.slot is None else f"[{s.slot}]"
            parts.append(f"{glyph}{slot} {s.dst}")
        return " ".join(parts)


@dataclass(frozen=True)
class CoherenceFailure:
    left: Terminal
    right: Terminal
    op: str  # "<" | ">"
    expected: bool
    actual: bool

    def __str__(self) -> str:
        want = "expected" if self.expected else "unexpected"
        return f"{want} {self.left} {self.op} {self.right}"


class RelationTable:
    def __init__(self, elab: ElaboratedGrammar, entries: set[RelEntry]):
        self.elab = elab
        self.entries = frozenset(entries)
        self._advance: dict[tuple, list[RelStep]] = {}
        self._dist_cache: dict[tuple, dict[tuple, int]] = {}
        self._walk_searches: dict[tuple, _WalkSearch] = {}
        self._lt_pairs: set[tuple] = set()
        self._eq_pairs: set[tuple] = set()
        self._gt_pairs: set[tuple] = set()
        for e in sorted(entries, key=RelEntry.key):
            if e.op == ">":
                self._gt_pairs.add((e.left.key(), e.right.key()))
                continue
            pairs = self._lt_pairs if e.op == "<" else self._eq_pairs
            pairs.add((e.left.key(), e.right.key()))
            step = RelStep(e.op, e.slot, e.right, e.right_template, e.right_pos, e.slot_pos)
            self._advance.setdefault((e.left.key(), e.left_template), []).append(step)

    def steps_from(self, src: Terminal, src_template: str | None) -> list[RelStep]:
        if src_template is not None:
            return self._advance.get((src.key(), src_template), [])
        out = []
        for (tkey, _), steps in sorted(self._advance.items()):
            if tkey == src.key():
                out.extend(steps)
        return out

    def distances_to(self, dst: Terminal) -> dict[tuple, int]:
        """Minimum number of ⋖/≐ steps from each (terminal, template) state
        to reach dst; states that cannot reach it are absent."""
        cached = self._dist_cache.get(dst.key())
        if cached is not None:
            return cached
        back: dict[tuple, set[tuple]] = {}
        for (lkey, ltempl), steps in self._advance.items():
            for s in steps:
                back.setdefault((s.dst.key(), s.dst_template), set()).add((lkey, ltempl))
        dist: dict[tuple, int] = {}
        frontier = {
            state
            for (dkey, _dt), preds in back.items()
            if dkey == dst.key()
            for state in preds
        }
        d = 1
        while frontier:
            fresh = set()
            for state in frontier:
                if state not in dist:
                    dist[state] = d
                    fresh |= back.get(state, set())
            frontier = {s for s in fresh if s not in dist}
            d += 1
        self._dist_cache[dst.key()] = dist
        return dist

    def walk_search(
        self,
        src: Terminal,
        src_template: str | None,
        dst: Terminal,
        max_len: int,
        apply_filter: bool,
    ) -> _WalkSearch:
        key = (src.key(), src_template or "", dst.key(), max_len, apply_filter)
        ws = self._walk_searches.get(key)
        if ws is None:
            ws = _WalkSearch(self, src, src_template, dst, max_len, apply_filter)
            self._walk_searches[key] = ws
        return ws

    def has_lt(self, left: Terminal, right: Terminal) -> bool:
        return (left.key(), right.key()) in self._lt_pairs

    def has_eq(self, left: Terminal, right: Terminal) -> bool:
        return (left.key(), right.key()) in self._eq_pairs

    def has_gt(self, left: Terminal, right: Terminal) -> bool:
        return (left.key(), right.key()) in self._gt_pairs

    def has_advance(self, left: Terminal, right: Terminal) -> bool:
        return self.has_lt(left, right) or self.has_eq(left, right)

    def rows(self, ascii_mode: bool = False) -> list[str]:
        return [e.render(ascii_mode) for e in sorted(self.entries, key=RelEntry.key)]


# ---------------------------------------------------------------------------
# construction


def _edge_sets(e: ElaboratedGrammar, leading: bool) -> dict[BoundedSort, frozenset]:
    """firstEdges/lastEdges: per cell, the (slot, terminal, template, pos)
    tuples a subtree in that cell can expose at its leading/trailing edge.

    Postfix grout is opaque at its leading edge (it contributes only the
    pair (foreign cell, ⦉)); prefix grout mirrors that at its trailing edge.
    """
    cells = e.reachable_cells()
    edges: dict[BoundedSort, set] = {n: set() for n in cells}

    def contribution(n: BoundedSort) -> set:
        out = set()
        for t, fls in e.templates_for(n):
            opaque = (t.kind == "postfix") if leading else (t.kind == "prefix")
            for f, l in fls:
                end = f if leading else l
                term = e.terminal_at(t, end)
                if term is not None:
                    if not opaque:
                        out.add((None, None, term, t.key, end))
                    continue
                child = e.child_cell(t, end, f, l, n)
                if opaque:
                    grout_pos = l if leading else f
                    out.add((child, end, e.terminal_at(t, grout_pos), t.key, grout_pos))
                    continue
                if leading:
                    adjacent = [
                        q for q in t.auto.follow[end] if l in t.auto.reach[q]
                    ]
                else:
                    adjacent = [
                        q
                        for q in range(len(t.auto.positions))
                        if end in t.auto.follow[q] and q in t.auto.reach[f]
                    ]
                for q in sorted(adjacent):
                    out.add((child, end, e.terminal_at(t, q), t.key, q))
                out |= edges.get(child, set())
        return out

    changed = True
    while changed:
        changed = False
        for n in cells:
            fresh = contribution(n)
            if not fresh <= edges[n]:
                edges[n] |= fresh
                changed = True
    return {n: frozenset(v) for n, v in edges.items()}


def build_relations(e: ElaboratedGrammar) -> RelationTable:
    first_edges = _edge_sets(e, leading=True)
    last_edges = _edge_sets(e, leading=False)
    entries: set[RelEntry] = set()
    root_t = e.root_template

    def lt_from(a_term: Terminal, a_template: str, child: BoundedSort) -> None:
        for slot, slot_pos, term, tkey, pos in first_edges[child]:
            entries.add(RelEntry(a_term, a_template, "<", slot, term, tkey, pos, slot_pos))

    def gt_into(child: BoundedSort, b_term: Terminal, b_template: str, b_pos: int) -> None:
        for slot, _slot_pos, term, tkey, _pos in last_edges[child]:
            entries.add(RelEntry(term, tkey, ">", slot, b_term, b_template, b_pos))

    for n in e.reachable_cells():
        for t, fls in e.templates_for(n):
            for f, l in fls:
                path = ElaboratedGrammar._path_positions(t, f, l)
                for x in path:
                    if t.sort_at(x) is None:
                        continue
                    child = e.child_cell(t, x, f, l, n)
                    for a in path:
                        a_term = e.terminal_at(t, a)
                        if a_term is not None and x in t.auto.follow[a]:
                            lt_from(a_term, t.key, child)
                    for b in sorted(t.auto.follow[x]):
                        if l in t.auto.reach[b]:
                            gt_into(child, e.terminal_at(t, b), t.key, b)

    # EQ entries are cell-independent (interior slots carry fixed bounds)
    for t in e.templates:
        if t.kind in ("root", "postfix"):
            continue
        outer = unbounded(t.sort)
        if not any(e.fl_pairs(t, n) for n in e.reachable_cells()):
            continue
        for f, l in sorted(t.auto.fl_pairs):
            for a in ElaboratedGrammar._path_positions(t, f, l):
                a_term = e.terminal_at(t, a)
                if a_term is None:
                    continue
                for q in sorted(t.auto.follow[a]):
                    if l not in t.auto.reach[q]:
                        continue
                    if e.terminal_at(t, q) is not None:
                        entries.add(
                            RelEntry(a_term, t.key, "=", None, e.terminal_at(t, q), t.key, q)
                        )
                        continue
                    child = e.child_cell(t, q, f, l, outer)
                    for b in sorted(t.auto.follow[q]):
                        if l in t.auto.reach[b]:
                            entries.add(
                                RelEntry(
                                    a_term, t.key, "=", child, e.terminal_at(t, b), t.key, b, q
                                )
                            )

    # the root production: START ⋖ program firsts, program lasts ⋗ END,
    # START ≐ END around the root cell
    lt_from(START, root_t.key, e.root_cell)
    gt_into(e.root_cell, END, root_t.key, 2)
    entries.add(RelEntry(START, root_t.key, "=", e.root_cell, END, root_t.key, 2, 1))
    return RelationTable(e, entries)


# ---------------------------------------------------------------------------
# coherence


def _edge_tiles(e: ElaboratedGrammar, trailing: bool) -> list[tuple[Terminal, str, int]]:
    """Tiles immediately adjacent to a trailing (resp. leading) self-sort
    cell of their own form: the premise set of the coherence check."""
    out = []
    for t in e.templates:
        if t.kind != "tile":
            continue
        auto = t.auto
        for f, l in sorted(auto.fl_pairs):
            if trailing:
                if t.sort_at(l) != t.sort:
                    continue
                for a in ElaboratedGrammar._path_positions(t, f, l):
                    if e.terminal_at(t, a) is not None and l in auto.follow[a]:
                        out.append((e.terminal_at(t, a), t.sort, t.level))
            else:
                if t.sort_at(f) != t.sort:
                    continue
                for q in sorted(auto.follow[f]):
                    if l in auto.reach[q] and e.terminal_at(t, q) is not None:
                        out.append((e.terminal_at(t, q), t.sort, t.level))
    seen = []
    for item in out:
        if item not in seen:
            seen.append(item)
    return seen


def check_coherence(e: ElaboratedGrammar, table: RelationTable | None = None) -> list[CoherenceFailure]:
    """Verify that the table's ⋖/⋗ facts between same-sort edge tiles agree
    with the declared levels and associativities."""
    table = table if table is not None else build_relations(e)
    failures: list[CoherenceFailure] = []
    right_open = _edge_tiles(e, trailing=True)
    left_open = _edge_tiles(e, trailing=False)
    for tl, sl, pl in right_open:
        for tr, sr, pr in left_open:
            if sl != sr:
                continue
            expect_lt = e.g.lt(sl, lvl(pl), lvl(pr))
            actual_lt = table.has_lt(tl, tr)
            if expect_lt != actual_lt:
                failures.append(CoherenceFailure(tl, tr, "<", expect_lt, actual_lt))
            expect_gt = e.g.gt(sl, lvl(pl), lvl(pr))
            actual_gt = table.has_gt(tl, tr)
            if expect_gt != actual_gt:
                failures.append(CoherenceFailure(tl, tr, ">", expect_gt, actual_gt))
    return failures


# ---------------------------------------------------------------------------
# walks


def tile_template_of(e: ElaboratedGrammar, tile: TileDef) -> Template:
    return e._tile_templates[(tile.sort, tile.level, tile.form_index)]


def _interior_tile_run(walk: Walk) -> bool:
    """True when some ≐-run strictly between the endpoints is made of tiles."""
    runs: list[list[Terminal]] = [[walk.src]]
    for step in walk.steps:
        if step.op == "<":
            runs.append([step.dst])
        else:
            runs[-1].append(step.dst)
    for run in runs[1:-1] if len(runs) > 2 else []:
        if all(t.kind == "tile" for t in run):
            return True
    return False


def _step_material(t: Terminal) -> tuple:
    """Obligation weight a walk step's terminal would add to the stack, in
    (infix grout, sort grout, ghost, operand grout) order."""
    if t.kind == "tile":
        return (0, 0, 1, 0)
    if t.kind == "grout":
        if t.shape == INFIX:
            return (1, 0, 0, 0)
        if t.shape == OPERAND:
            return (0, 0, 0, 1)
        return (0, 1, 0, 0)
    return (0, 0, 0, 0)


class _WalkSearch:
    """Breadth-first walk enumeration from one terminal to another with
    dominance pruning: partial walks that agree on endpoint, slot sequence,
    height, and the tile-parity of their current ≐-run differ only in step
    material, so only the cheapest representative can win arbitration and
    the rest are dropped.  Levels are computed lazily and kept, so repeated
    searches for the same pair are free."""

    def __init__(
        self,
        table: RelationTable,
        src: Terminal,
        src_template: str | None,
        dst: Terminal,
        max_len: int,
        apply_filter: bool,
    ):
        self.table = table
        self.src = src
        self.dst = dst
        self.max_len = max_len
        self.apply_filter = apply_filter
        self.dist = table.distances_to(dst)
        self.batches: list[list[Walk]] = []
        # state -> (material, walk key, steps, terminal, template)
        self.frontier: dict[tuple, tuple] = {}
        if self._viable(src, src_template, 0):
            state = (src.key(), src_template or "", (), 0, src.kind == "tile")
            self.frontier[state] = ((0, 0, 0, 0), (), (), src, src_template)

    def _viable(self, terminal: Terminal, template: str | None, used: int) -> bool:
        if template is not None:
            return self.dist.get((terminal.key(), template), self.max_len + 1) <= self.max_len - used
        k = terminal.key()
        return any(kk == k and d <= self.max_len - used for (kk, _t), d in self.dist.items())

    def batch(self, i: int) -> list[Walk]:
        while len(self.batches) <= i < self.max_len:
            self._level()
        return self.batches[i] if i < len(self.batches) else []

    def _level(self) -> None:
        n = len(self.batches) + 1
        found: list[Walk] = []
        nxt: dict[tuple, tuple] = {}
        for state, (cost, _wkey, steps, here, template) in self.frontier.items():
            _k, _t, slots, height, run_tiles = state
            for step in self.table.steps_from(here, template):
                if step.op == "<" and self.apply_filter and run_tiles and height > 0:
                    # completing an interior all-tile ≐-run: filtered for good
                    continue
                extended = steps + (step,)
                if step.dst == self.dst:
                    found.append(Walk(self.src, extended))
                if step.dst.kind not in ("tile", "grout"):
                    continue
                if not self._viable(step.dst, step.dst_template, n):
                    continue
                ncost = _ob4(cost, _step_material(step.dst))
                nslots = slots + ((step.slot.key() if step.slot is not None else None),)
                if step.op == "<":
                    nheight, nrun = height + 1, step.dst.kind == "tile"
                else:
                    nheight, nrun = height, run_tiles and step.dst.kind == "tile"
                nstate = (step.dst.key(), step.dst_template, nslots, nheight, nrun)
                nkey = tuple(s.key() for s in extended)
                old = nxt.get(nstate)
                if old is None or (ncost, nkey) < (old[0], old[1]):
                    nxt[nstate] = (ncost, nkey, extended, step.dst, step.dst_template)
        self.batches.append(sorted(found, key=Walk.key))
        self.frontier = nxt if n < self.max_len else {}


def _ob4(a: tuple, b: tuple) -> tuple:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def iter_walk_lengths(
    table: RelationTable,
    src: Terminal,
    src_template: str | None,
    dst: Terminal,
    max_len: int = 6,
    apply_filter: bool = True,
):
    """Yield the walks from src to dst one length class at a time, shortest
    first.  States that cannot reach dst within the remaining budget are
    pruned; results are cached on the table."""
    ws = table.walk_search(src, src_template, dst, max_len, apply_filter)
    for i in range(max_len):
        yield ws.batch(i)


def completion_walks(
    e: ElaboratedGrammar, src: Terminal, src_template: str | None
) -> list[Walk]:
    """Walks from a stack head to the end delimiter: the ≐-chain of the
    head production's remaining requisite tiles (as ghosts) followed by a
    final step into END whose slot is the trailing cell."""
    if src.kind == "start":
        return [Walk(src, (RelStep("=", e.root_cell, END, e.root_template.key, 2),))]
    templates = []
    if src.kind == "tile":
        templates = [tile_template_of(e, src.tile)]
    else:
        templates = [
            t
            for t in e.templates
            if t.key == src_template
            or (
                src_template is None
                and any(e.terminal_at(t, p) == src for p in range(len(t.auto.positions)))
            )
        ]
    out = []
    for t in templates:
        positions = [p for p in range(len(t.auto.positions)) if e.terminal_at(t, p) == src]
        for pos in positions:
            path = _shortest_completion(t, pos)
            if path is None:
                continue
            steps: list[RelStep] = []
            pending: BoundedSort | None = None
            pending_pos: int | None = None
            ok = True
            for q in path[1:]:
                term = e.terminal_at(t, q)
                if term is None:
                    if pending is not None:
                        ok = False
                        break
                    pending = e.child_cell(t, q, -1, path[-1], unbounded(t.sort))
                    pending_pos = q
                else:
                    steps.append(RelStep("=", pending, term, t.key, q, pending_pos))
                    pending = None
                    pending_pos = None
            if not ok:
                continue
            steps.append(RelStep("=", pending, END, e.root_template.key, 2, pending_pos))
            out.append(Walk(src, tuple(steps)))
    return sorted(out, key=Walk.key)


def _shortest_completion(t: Template, pos: int) -> tuple[int, ...] | None:
    """Shortest follow-path from pos to an accepting position (possibly pos
    itself)."""
    if pos in t.auto.last:
        return (pos,)
    frontier = [(pos,)]
    seen = {pos}
    while frontier:
        nxt = []
        for path in frontier:
            for q in sorted(t.auto.follow[path[-1]]):
                if q in seen:
                    continue
                seen.add(q)
                extended = path + (q,)
                if q in t.auto.last:
                    return extended
                nxt.append(extended)
        frontier = nxt
    return None


def walks(
    table: RelationTable,
    src: Terminal,
    dst: Terminal,
    src_template: str | None = None,
    max_len: int = 6,
) -> list[Walk]:
    """The minimal-length-class walks from src to dst (filtered)."""
    if dst.kind == "end":
        found = completion_walks(table.elab, src, src_template)
        if not found:
            return []
        best = min(w.length for w in found)
        return [w for w in found if w.length == best]
    for batch in iter_walk_lengths(table, src, src_template, dst, max_len):
        if batch:
            return batch
    return []
