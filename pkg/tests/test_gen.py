from __future__ import annotations

import random
import re

from artifact.gen import (
    sample_class_text,
    sample_derivation,
    sample_grammar,
    sample_program,
    sample_tokens,
)
from artifact.grammar import builtin_hazel, validate
from artifact.molder import choose, machinery
from artifact.parser import obligations, start_stack, well_formed_term
from artifact.relations import check_coherence

_G = builtin_hazel()
_M = machinery(_G)


def test_class_text_samples_full_matches():
    for pattern in ("[0-9]+", "[a-z][a-zA-Z0-9_]*", "[a-z][0-9]?"):
        for seed in range(25):
            text = sample_class_text(pattern, random.Random(seed))
            assert re.fullmatch(pattern, text), (pattern, text)


def test_class_text_avoids_reserved_words():
    labels = {t.label for t in _G.tiles if not t.is_class}
    rng = random.Random(11)
    for _ in range(50):
        texts = sample_tokens(_G, rng, depth=2)
        # every sampled identifier must have been re-rolled off a keyword
        assert all(t in labels or re.fullmatch("[0-9]+|[a-z][a-zA-Z0-9_]*", t) for t in texts)


def test_derivations_parse_back_to_themselves():
    for seed in range(20):
        rng = random.Random(seed)
        texts, term = sample_derivation(_G, rng, depth=3)
        k = start_stack()
        for tx in texts:
            k = choose(_G, k, [], tx).after
        final = _M.parser.push(k, [], _M.parser.end_token())
        assert final.link.item == term
        assert obligations(term).total() == 0
        assert well_formed_term(_M.elab, None, term)


def test_sample_tokens_match_derivation_texts():
    texts = sample_tokens(_G, random.Random(4), depth=2)
    again, term = sample_derivation(_G, random.Random(4), depth=2)
    assert texts == again


def test_sample_program_reaches_minimum_length():
    for seed, n in ((1, 12), (2, 50), (3, 200)):
        texts = sample_program(_G, random.Random(seed), n, depth=3)
        assert len(texts) >= n


def test_sampling_is_deterministic_by_seed():
    a = sample_program(_G, random.Random(9), 30)
    b = sample_program(_G, random.Random(9), 30)
    assert a == b
    g1, g2 = sample_grammar(random.Random(5)), sample_grammar(random.Random(5))
    assert [str(t) for t in g1.tiles] == [str(t) for t in g2.tiles]


def test_sampled_grammars_are_valid_and_coherent():
    for seed in range(8):
        g = sample_grammar(random.Random(seed))
        assert validate(g) == []
        m = machinery(g)
        assert check_coherence(m.elab, m.table) == []


def test_sampled_grammar_programs_parse_cleanly():
    for seed in range(6):
        g = sample_grammar(random.Random(seed))
        m = machinery(g)
        texts = sample_program(g, random.Random(seed + 100), 15, depth=3)
        k = start_stack()
        for tx in texts:
            k = choose(g, k, [], tx).after
        final = m.parser.push(k, [], m.parser.end_token())
        assert obligations(final.link.item).total() == 0
