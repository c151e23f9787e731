"""Random sampling of grammatical programs and of small grammars.

Programs are sampled as derivations of the elaborated bounded-sort CFG —
pick an admissible tile template for a cell, pick a realizable path through
its form automaton, recurse into the child cells — so every sampled token
stream is grammatical by construction.  Grammars are sampled as small
precedence-bounded grammars where every sort keeps at least one infix and
one operand form, which keeps every cell inhabitable.
"""

from __future__ import annotations

import random
import re

try:  # stdlib regex parser; renamed in newer interpreters
    from re import _parser as sre_parse  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover
    import sre_parse  # type: ignore[no-redef]

from .elaboration import ElaboratedGrammar, unbounded
from .grammar import PBG, infer_molds
from .molder import machinery
from .parser import Token, make_term

# ---------------------------------------------------------------------------
# token-class text sampling


def sample_class_text(pattern: str, rng: random.Random) -> str:
    """A random string accepted by a (simple) token-class regex."""

    def from_set(items) -> str:
        choices = []
        for op, arg in items:
            name = str(op)
            if name == "LITERAL":
                choices.append(chr(arg))
            elif name == "RANGE":
                lo, hi = arg
                choices.append(chr(rng.randint(lo, min(hi, lo + 25))))
            elif name == "CATEGORY":
                choices.append(rng.choice("0123456789" if "DIGIT" in str(arg) else "abcxyz_"))
        return rng.choice(choices) if choices else "a"

    def emit(ops) -> str:
        out = []
        for op, arg in ops:
            name = str(op)
            if name == "LITERAL":
                out.append(chr(arg))
            elif name == "IN":
                out.append(from_set(arg))
            elif name in ("MAX_REPEAT", "MIN_REPEAT"):
                lo, hi, sub = arg
                for _ in range(rng.randint(lo, min(hi, lo + 2))):
                    out.append(emit(sub))
            elif name == "SUBPATTERN":
                out.append(emit(arg[3]))
            elif name == "BRANCH":
                out.append(emit(rng.choice(arg[1])))
            elif name == "CATEGORY":
                out.append(rng.choice("0123456789" if "DIGIT" in str(arg) else "abcxyz_"))
            else:
                out.append("a")
        return "".join(out)

    parsed = sre_parse.parse(pattern)
    for _ in range(32):
        text = emit(parsed)
        if text and re.fullmatch(pattern, text):
            return text
    raise ValueError(f"cannot sample text for pattern {pattern!r}")


# ---------------------------------------------------------------------------
# program sampling


def _tile_text(g: PBG, e: ElaboratedGrammar, tile, rng: random.Random) -> str:
    if not tile.is_class:
        return tile.label
    labels = {t.label for t in g.tiles if not t.is_class}
    pattern = g.token_classes[tile.label].pattern
    for _ in range(32):
        text = sample_class_text(pattern, rng)
        if text not in labels:  # reserved words shadow class matches
            return text
    raise ValueError(f"class {tile.label} only samples reserved words")


def sample_derivation(g: PBG, rng: random.Random, depth: int = 4, cell=None):
    """One random derivation of the cell (root by default): the token texts
    together with the term a sound parse must rebuild from them."""
    e = machinery(g).elab
    n = cell if cell is not None else unbounded(g.root)

    def go(cell, depth: int):
        pool = []
        for t, pairs in e.templates_for(cell):
            if t.kind != "tile":
                continue
            for f, l in pairs:
                for path in e._paths(t, f, l, max_len=6):
                    pool.append((t, f, l, path))
        if not pool:
            raise ValueError(f"cell {cell} admits no tile production")
        leaves = [c for c in pool if all(c[0].sort_at(p) is None for p in c[3])]
        if depth <= 0 and leaves:
            pool = leaves
        t, f, l, path = rng.choice(pool)
        texts: list[str] = []
        children: list = []
        for p in path:
            sort = t.sort_at(p)
            if sort is None:
                term = t.terminal_at(p)
                text = _tile_text(g, e, term.tile, rng)
                texts.append(text)
                children.append(Token(term, text, False, t.key, p))
            else:
                sub_texts, sub_term = go(e.child_cell(t, p, f, l, cell), depth - 1)
                texts.extend(sub_texts)
                children.append(sub_term)
        return texts, make_term(e, t, path, children)

    return go(n, depth)


def sample_tokens(g: PBG, rng: random.Random, depth: int = 4, cell=None) -> list[str]:
    """Token texts of one random derivation of the cell (root by default)."""
    return sample_derivation(g, rng, depth, cell)[0]


def _joiners(g: PBG, e: ElaboratedGrammar) -> list[str]:
    """Literal infix tiles of the root sort: both automaton ends are sorts."""
    out = []
    for t in e.templates:
        if t.kind != "tile" or t.sort != g.root:
            continue
        auto = t.auto
        if not all(t.sort_at(p) is not None for p in auto.first):
            continue
        if not all(t.sort_at(p) is not None for p in auto.last):
            continue
        for p in range(len(auto.positions)):
            term = t.terminal_at(p)
            if term is not None and term.kind == "tile" and not term.tile.is_class:
                out.append(term.tile.label)
    return sorted(set(out))


def sample_program(g: PBG, rng: random.Random, min_tokens: int, depth: int = 4) -> list[str]:
    """A grammatical token stream of at least min_tokens texts: random
    derivations joined by root-sort infix operators."""
    joiners = _joiners(g, machinery(g).elab)
    out = sample_tokens(g, rng, depth)
    while len(out) < min_tokens:
        if joiners:
            out.append(rng.choice(joiners))
        out.extend(sample_tokens(g, rng, depth))
    return out


# ---------------------------------------------------------------------------
# grammar sampling

_BRACKETS = [("(", ")"), ("[", "]"), ("{", "}"), ("<<", ">>"), ("|[", "]|")]
_OPS = ["+", "-", "*", "/", "%", "&", "|", "^", "@", "?", "~", "!", ";", ":", ".", "=", "#", "&&", "||", "::", "++"]
_KEYS = ["DO", "END", "IF", "TH", "EL", "FN", "GO", "OF", "BY", "AT"]


def sample_grammar(rng: random.Random) -> PBG:
    """A random small precedence-bounded grammar: up to three sorts with up
    to four precedence levels each, plain-sequence forms only, and at least
    one infix and one operand form per sort."""
    names = ["A", "B", "C"][: rng.randint(1, 3)]
    ops = _OPS[:]
    keys = _KEYS[:]
    brackets = _BRACKETS[:]
    rng.shuffle(ops)
    rng.shuffle(keys)
    rng.shuffle(brackets)

    sorts: dict[str, list[dict]] = {}
    for s in names:
        n_levels = rng.randint(2, 4)
        levels = []
        for prec in range(n_levels):
            top = prec == n_levels - 1
            forms: list[str] = []
            if top:
                o, c = brackets.pop()
                forms.append(f"'{o}' {s} '{c}'")
                forms.append("$v")
            else:
                forms.append(f"{s} '{ops.pop()}' {s}")
                roll = rng.random()
                if roll < 0.25 and keys:
                    forms.append(f"'{keys.pop()}' {s}")
                elif roll < 0.4 and len(keys) >= 2:
                    k1, k2 = keys.pop(), keys.pop()
                    other = rng.choice(names)
                    forms.append(f"'{k1}' {other} '{k2}' {s}")
                elif roll < 0.5:
                    forms.append(f"{s} '{ops.pop()}'")
            assoc = None if top else rng.choice(["left", "right", None])
            levels.append({"prec": prec, "assoc": assoc, "forms": forms})
        sorts[s] = levels
    root = names[0]
    for s in names[1:]:
        # keep every sort reachable from the root
        o, c = brackets.pop()
        sorts[root][-1]["forms"].append(f"'{o}' {s} '{c}'")
    data = {"root": root, "token_classes": {"v": "[a-z][0-9]?"}, "sorts": sorts}
    return infer_molds(data)
