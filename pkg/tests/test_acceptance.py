"""Acceptance battery for the whole pipeline.

Covers: push-machine totality and stack validity under mold-level fuzz,
completion-only output, roundtripping of randomly derived programs, the
relation table against brute-force derivation witnessing, structural lemma
scans, golden editing scripts, ghost maintenance at the stack level, molder
optimality, and performance sanity.
"""

import json
import math
import random
import time
from pathlib import Path

import pytest

from artifact.cli import main
from artifact.editor import parse_texts, run_script
from artifact.elaboration import (
    END,
    GROUT_TIPS,
    START,
    BoundedSort,
    ElaboratedGrammar,
)
from artifact.gen import sample_derivation, sample_grammar, sample_program
from artifact.grammar import builtin_hazel, lvl, validate
from artifact.molder import candidates, choose, machinery
from artifact.parser import (
    item_tokens,
    obligations,
    render_item,
    start_stack,
    well_formed_stack,
    well_formed_term,
)
from artifact.relations import check_coherence

_G = builtin_hazel()
_M = machinery(_G)
_SEED = 96121
_GOLDENS = Path(__file__).parent / "goldens"
_CLASS_TEXTS = {"num": ("0", "7", "42", "128"), "id": ("x", "y", "zz", "foo")}
_MINI_SEEDS = tuple(range(7000, 7020))


def _push_texts(texts, k=None):
    k = k if k is not None else start_stack()
    for text in texts:
        k = choose(_G, k, [], text).after
    return k


def _finish(k):
    return _M.parser.push(k, [], _M.parser.end_token())


# ---------------------------------------------------------------------------
# totality and completion-only fuzz


@pytest.fixture(scope="module")
def fuzz():
    """10,000 random molded token sequences, checking every intermediate
    stack and the final term as we go; class tokens draw from fixed pools."""
    tiles = sorted(_M.occurrence, key=str)
    stats = {
        "sequences": 0,
        "stack_failures": 0,
        "term_failures": 0,
        "completion_mismatches": 0,
    }
    t0 = time.perf_counter()
    for i in range(10_000):
        rng = random.Random(_SEED + i)
        k, seen, texts = start_stack(), {}, []
        for _ in range(rng.randint(0, 50)):
            tile = rng.choice(tiles)
            text = rng.choice(_CLASS_TEXTS[tile.label]) if tile.is_class else tile.label
            k = _M.parser.push(k, [], _M.token_for(tile, text))
            if not well_formed_stack(_M.elab, _M.table, k, seen):
                stats["stack_failures"] += 1
            texts.append(text)
        k = _finish(k)
        if not well_formed_stack(_M.elab, _M.table, k, seen):
            stats["stack_failures"] += 1
        term = k.link.item
        if not well_formed_term(_M.elab, _M.elab.root_cell, term):
            stats["term_failures"] += 1
        kept = [t.text for t in item_tokens(term) if t.terminal.kind == "tile" and not t.ghost]
        if kept != texts:
            stats["completion_mismatches"] += 1
        stats["sequences"] += 1
    stats["elapsed"] = time.perf_counter() - t0
    return stats


def test_totality_fuzz_all_stacks_and_terms_well_formed(fuzz):
    assert fuzz["sequences"] == 10_000
    assert fuzz["stack_failures"] == 0
    assert fuzz["term_failures"] == 0
    assert fuzz["elapsed"] <= 60.0


def test_completion_only_output_preserves_input_tokens(fuzz):
    assert fuzz["completion_mismatches"] == 0


# ---------------------------------------------------------------------------
# soundness on derived programs


def test_derived_programs_parse_back_to_generating_tree():
    failures = []
    for i in range(1000):
        rng = random.Random(_SEED * 3 + i)
        texts, term = sample_derivation(_G, rng, depth=rng.randint(0, 6))
        final = _finish(_push_texts(texts))
        parsed = final.link.item
        ok = (
            parsed == term
            and obligations(parsed).total() == 0
            and well_formed_term(_M.elab, _M.elab.root_cell, parsed)
        )
        if not ok:
            failures.append(i)
    assert failures == []


# ---------------------------------------------------------------------------
# relation tables against brute-force derivation witnessing


def _witnessed_relation_keys(e: ElaboratedGrammar, max_depth: int = 6) -> set:
    """Relation keys read off bounded-depth derivations: enumerate concrete
    form instances per reachable cell (breadth-first by node depth), take the
    in-form terminal adjacencies as ≐, and close leading/trailing spines of
    each cell for ⋖/⋗.  Prefix and postfix grout stay opaque on their cell
    side, so spines never continue through a sort transition.  Every cell
    completes with a hole one level deeper, which is what the depth guards
    charge for instances that still have open cells."""
    rdepth = {e.root_cell: 2}
    frontier = [e.root_cell]
    instances = [(e.root_cell, e.root_template, 0, 2, (0, 1, 2), 1)]
    while frontier:
        nxt = []
        for n in frontier:
            d = rdepth[n]
            for t, fls in e.templates_for(n):
                for f, l in fls:
                    for path in e._paths(t, f, l, max_len=12):
                        has_cells = any(t.sort_at(p) is not None for p in path)
                        if d + (1 if has_cells else 0) > max_depth:
                            continue
                        instances.append((n, t, f, l, path, d))
                        for p in path:
                            if t.sort_at(p) is None:
                                continue
                            child = e.child_cell(t, p, f, l, n)
                            if child not in rdepth:
                                rdepth[child] = d + 1
                                nxt.append(child)
        frontier = nxt

    def edges(cell, depth, leading, seen):
        out = set()
        if (cell, depth) in seen or depth > max_depth:
            return out
        seen = seen | {(cell, depth)}
        for t2, fls2 in e.templates_for(cell):
            for f2, l2 in fls2:
                path2 = ElaboratedGrammar._path_positions(t2, f2, l2)
                if depth + (0 if all(t2.sort_at(p) is None for p in path2) else 1) > max_depth:
                    continue
                end = f2 if leading else l2
                term = e.terminal_at(t2, end)
                if term is not None:
                    out.add((None, term, t2.key, end))
                    continue
                c2 = e.child_cell(t2, end, f2, l2, cell)
                if t2.kind == ("postfix" if leading else "prefix"):
                    gpos = l2 if leading else f2
                    out.add((c2, e.terminal_at(t2, gpos), t2.key, gpos))
                    continue
                if leading:
                    adjacent = [q for q in t2.auto.follow[f2] if l2 in t2.auto.reach[q]]
                else:
                    adjacent = [
                        a
                        for a in path2
                        if e.terminal_at(t2, a) is not None and l2 in t2.auto.follow[a]
                    ]
                for q in sorted(adjacent):
                    if e.terminal_at(t2, q) is not None:
                        out.add((c2, e.terminal_at(t2, q), t2.key, q))
                out |= edges(c2, depth + 1, leading, seen)
        return out

    def key_of(left, op, slot, right, rtempl, rpos):
        return (left.key(), op, slot.key() if slot else (), right.key(), rtempl, rpos)

    keys = set()
    for n, t, f, l, path, d in instances:
        if t.kind == "root":
            elems = [(0, START), (1, e.root_cell), (2, END)]
        else:
            elems = [
                (
                    p,
                    e.terminal_at(t, p)
                    if e.terminal_at(t, p) is not None
                    else e.child_cell(t, p, f, l, n),
                )
                for p in path
            ]
        for i in range(len(elems) - 1):
            (_pa, a), (pb, b) = elems[i], elems[i + 1]
            a_cell, b_cell = isinstance(a, BoundedSort), isinstance(b, BoundedSort)
            if not a_cell and not b_cell:
                keys.add(key_of(a, "=", None, b, t.key, pb))
            elif not a_cell and b_cell:
                for slot, term, tkey, pos in edges(b, d + 1, True, frozenset()):
                    keys.add(key_of(a, "<", slot, term, tkey, pos))
                if i + 2 < len(elems) and not isinstance(elems[i + 2][1], BoundedSort):
                    pc, c = elems[i + 2]
                    keys.add(key_of(a, "=", b, c, t.key, pc))
            elif a_cell and not b_cell:
                for slot, term, tkey, pos in edges(a, d + 1, False, frozenset()):
                    keys.add(key_of(term, ">", slot, b, t.key, pb))
    return keys


def test_hazel_coherence_has_zero_failures():
    assert check_coherence(_M.elab, _M.table) == []


def test_hazel_table_matches_brute_force_witnessing():
    witnessed = _witnessed_relation_keys(_M.elab)
    table = {entry.key() for entry in _M.table.entries}
    assert table - witnessed == set()
    assert witnessed - table == set()


@pytest.mark.parametrize("seed", _MINI_SEEDS)
def test_mini_grammar_table_matches_brute_force_witnessing(seed):
    g = sample_grammar(random.Random(seed))
    assert validate(g) == []
    m = machinery(g)
    assert check_coherence(m.elab, m.table) == []
    witnessed = _witnessed_relation_keys(m.elab)
    table = {entry.key() for entry in m.table.entries}
    assert table - witnessed == set()
    assert witnessed - table == set()


# ---------------------------------------------------------------------------
# structural lemma scans


def _lemma_violations(e: ElaboratedGrammar, table) -> list:
    """Scan every table entry against the structural invariants: ≐ only
    relates the delimiter pair, tile pairs, or same-sort grout pairs
    (homogeneity); convex grout tips admit only slotless ⋖/⋗ and concave
    grout pairs meet over the zero-bounded slot (grout precedence); START's
    only ≐ partner is END over the root cell; nothing relates past the
    stream delimiters (no escaping, no trespassing)."""
    left_convex = {s for s, tips in GROUT_TIPS.items() if tips[0] == "convex"}
    right_convex = {s for s, tips in GROUT_TIPS.items() if tips[1] == "convex"}
    bad = []
    for en in table.entries:
        L, R = en.left, en.right
        if en.op == "=" and not (
            (L.kind == "start" and R.kind == "end")
            or (L.kind == "tile" and R.kind == "tile")
            or (L.kind == "grout" and R.kind == "grout" and L.grout_sort == R.grout_sort)
        ):
            bad.append(("homogeneity", en.render()))
        if R.kind == "grout" and R.shape in left_convex:
            if not (en.op == "<" and en.slot is None):
                bad.append(("grout-precedence", en.render()))
        if L.kind == "grout" and L.shape in right_convex:
            if not (en.op == ">" and en.slot is None):
                bad.append(("grout-precedence", en.render()))
        if en.op == "=" and R.kind == "grout" and R.shape not in left_convex:
            if not (
                en.slot == BoundedSort(lvl(0), R.grout_sort, lvl(0))
                and L.kind == "grout"
                and L.shape not in right_convex
                and L.grout_sort == R.grout_sort
            ):
                bad.append(("grout-precedence", en.render()))
        if en.op == "=" and L.kind == "grout" and L.shape not in right_convex:
            if not (
                en.slot == BoundedSort(lvl(0), L.grout_sort, lvl(0))
                and R.kind == "grout"
                and R.shape not in left_convex
                and R.grout_sort == L.grout_sort
            ):
                bad.append(("grout-precedence", en.render()))
        if en.op == "=" and L.kind == "start":
            if not (R.kind == "end" and en.slot == e.root_cell):
                bad.append(("start-matches-end", en.render()))
        if (en.op == "<" and R.kind == "end") or (en.op == ">" and L.kind == "start"):
            bad.append(("no-escaping", en.render()))
        if R.kind == "start" or L.kind == "end":
            bad.append(("no-trespassing", en.render()))
    return bad


@pytest.mark.parametrize("seed", (None,) + _MINI_SEEDS)
def test_lemma_scans_have_zero_violations(seed):
    if seed is None:
        m = _M
    else:
        m = machinery(sample_grammar(random.Random(seed)))
    assert _lemma_violations(m.elab, m.table) == []


# ---------------------------------------------------------------------------
# golden editing scripts


_GOLDEN_SCRIPTS = sorted(
    p.stem for p in _GOLDENS.glob("*.json") if p.stem != "paren_molding_audit"
)


@pytest.mark.parametrize("name", _GOLDEN_SCRIPTS)
def test_golden_editing_script_replays_exactly(name):
    doc = json.loads((_GOLDENS / f"{name}.json").read_text(encoding="utf-8"))
    models = run_script(_G, doc["script"])
    assert json.loads(json.dumps(models)) == doc["models"]


def test_golden_paren_molding_audit():
    doc = json.loads((_GOLDENS / "paren_molding_audit.json").read_text(encoding="utf-8"))
    k = _push_texts(doc["context"])
    audit = []
    mc = choose(_G, k, [], doc["token"], audit=audit)
    assert str(mc.tile) == doc["chosen"] == "(@P.2.0"
    assert mc.delta.is_zero()
    assert mc.delta.as_dict() == doc["chosen_delta"]
    assert audit == doc["candidates"]
    by_mold = {entry["mold"]: entry["delta"] for entry in audit}
    assert by_mold["(@E.4.0"]["ghosts"] == 1
    assert by_mold["(@E.4.0"]["operand_grout"] == 1
    assert by_mold["(@T.1.0"]["sort_grout"] == 1


# ---------------------------------------------------------------------------
# ghost maintenance at the stack level


def test_suffix_ghost_close_paren_consumed_by_solid():
    assert str(_push_texts(["(", "2"])) == "START ⋖ ( ⋖ 2"
    without = _finish(_push_texts(["(", "2", "+", "3"])).link.item
    assert render_item(without) == "(( ((2) + (3)) [)])"
    assert obligations(without).as_dict() == {"ghost": 1, "infix": 0, "operand": 0, "sort": 0}
    solid = _finish(_push_texts(["(", "2", ")", "+", "3"])).link.item
    assert render_item(solid) == "((( (2) )) + (3))"
    assert obligations(solid).as_dict() == {"ghost": 0, "infix": 0, "operand": 0, "sort": 0}


def test_prefix_ghost_in_removed_on_solid_entry():
    k = _push_texts(["let", "="])
    probe = choose(_G, start_stack(), [], "4")
    k = _M.parser.push(k, [], _M.token_for(probe.tile, "4"), late=True)
    assert str(k) == "START ⋖ let ≐_{⬚} = ≐_{⬚} in ⋖ 4"
    flags = []
    f = k
    while f is not None:
        flags.append((f.token.text, f.token.ghost))
        f = f.prev
    assert list(reversed(flags)) == [
        ("", False),
        ("let", False),
        ("=", False),
        ("in", True),
        ("4", False),
    ]
    k = _push_texts(["in"], k=k)
    assert str(k) == "START ⋖ let ≐_{⬚} = ≐_{(4)} in"
    assert not k.token.ghost
    term = _finish(k).link.item
    assert render_item(term) == "(let ⬚ = (4) in ⬚)"
    assert obligations(term).as_dict() == {"ghost": 0, "infix": 0, "operand": 2, "sort": 0}


# ---------------------------------------------------------------------------
# molder optimality


def test_molder_choice_is_argmin_over_exhaustive_candidates():
    pool = sorted({t.label for t in _G.tiles if not t.is_class}) + ["7", "42", "x", "zz"]
    rng = random.Random(_SEED * 7)
    k = start_stack()
    violations = []
    for step in range(1000):
        text = rng.choice(pool)
        mc = choose(_G, k, [], text)
        before = obligations(k)
        measured = {}
        for tile in candidates(_G, text):
            after = _M.parser.push(k, [], _M.token_for(tile, text))
            d = obligations(after) - before
            measured[str(tile)] = (d.infix, d.sort, d.ghost, d.operand)
        best = min(measured.values())
        if mc.delta.weight() != best or measured[str(mc.tile)] != mc.delta.weight():
            violations.append((step, text))
        k = mc.after
        if (step + 1) % 40 == 0:
            k = start_stack()
    assert violations == []


# ---------------------------------------------------------------------------
# performance sanity


def test_thousand_token_program_parses_under_a_second():
    texts = tuple(sample_program(_G, random.Random(_SEED), 1000))
    assert len(texts) >= 1000
    t0 = time.perf_counter()
    term = parse_texts(_G, texts)
    elapsed = time.perf_counter() - t0
    assert obligations(term).total() == 0
    assert elapsed < 1.0


def test_bench_exponent_stays_subquadratic_and_a_half(capsys):
    code = main(["--grammar", "hazel", "bench", "--seed", "0"])
    out = capsys.readouterr().out
    assert code == 0
    exponent_line = [l for l in out.splitlines() if l.startswith("parse exponent: ")]
    assert len(exponent_line) == 1
    exponent = float(exponent_line[0].split(": ")[1])
    assert math.isfinite(exponent)
    assert exponent <= 2.5
