"""Taxonomy parsing, lowest common ancestors, and concept similarity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imageqa.errors import FormatError
from imageqa.ontology import (
    Lexicon,
    Taxonomy,
    parse_lexicon,
    parse_taxonomy,
    word_wup,
)
from tests.helpers import TOY_LEXICON, TOY_TAXONOMY, random_parent_map


def toy():
    return parse_taxonomy(TOY_TAXONOMY)


# ----------------------------------------------------------------------
# parsing


def test_toy_taxonomy_depths():
    tax = toy()
    assert tax.depth("animal") == 1
    assert tax.depth("dog") == 2
    assert tax.depth("horse") == 2
    assert tax.depth("dalmatian") == 3


def test_single_concept_taxonomy():
    tax = parse_taxonomy("thing\t-\n")
    assert tax.depth("thing") == 1
    assert tax.wup("thing", "thing") == 1.0


def test_two_roots_rejected():
    with pytest.raises(FormatError, match="line 2"):
        parse_taxonomy("a\t-\nb\t-\n")


def test_unknown_parent_rejected():
    with pytest.raises(FormatError, match="ghost"):
        parse_taxonomy("a\t-\nb\tghost\n")


def test_cycle_rejected():
    with pytest.raises(FormatError):
        parse_taxonomy("a\t-\nb\tc\nc\tb\n")


def test_duplicate_concept_rejected():
    with pytest.raises(FormatError, match="line 3"):
        parse_taxonomy("a\t-\nb\ta\nb\ta\n")


def test_malformed_line_rejected():
    with pytest.raises(FormatError, match="line 2"):
        parse_taxonomy("a\t-\nno-tab-here\n")


def test_missing_concept_raises_key_error():
    with pytest.raises(KeyError):
        toy().depth("cat")
    with pytest.raises(KeyError):
        toy().wup("dog", "cat")


# ----------------------------------------------------------------------
# lca / wup


def test_lca_is_reflexive_and_respects_ancestry():
    tax = toy()
    assert tax.lca("dog", "dog") == "dog"
    assert tax.lca("dog", "dalmatian") == "dog"
    assert tax.lca("dalmatian", "dog") == "dog"
    assert tax.lca("dog", "horse") == "animal"
    assert tax.lca("animal", "dalmatian") == "animal"


def test_wup_self_similarity_is_exactly_one():
    tax = toy()
    for concept in ("animal", "dog", "horse", "dalmatian"):
        assert tax.wup(concept, concept) == 1.0


def test_toy_wup_values_are_exact():
    tax = toy()
    # siblings at depth 2 under a depth-1 ancestor: 2*1/(2+2)
    assert tax.wup("dog", "horse") == 0.5
    # parent/child: 2*2/(2+3)
    assert tax.wup("dog", "dalmatian") == 0.8
    assert tax.wup("horse", "dalmatian") == 2 * 1 / (2 + 3)


def test_wup_is_symmetric():
    tax = toy()
    names = ["animal", "dog", "horse", "dalmatian"]
    for a in names:
        for b in names:
            assert tax.wup(a, b) == tax.wup(b, a)


def brute_force_lca(parent, a, b):
    """Oracle: intersect the full ancestor chains, keep the deepest."""

    def chain(c):
        out = [c]
        while parent[c] is not None:
            c = parent[c]
            out.append(c)
        return out

    ancestors_a = chain(a)
    common = set(chain(b)).intersection(ancestors_a)
    # chains run child -> root, so the first common entry is the deepest
    return next(c for c in ancestors_a if c in common)


def test_lca_matches_ancestor_set_intersection_on_random_trees():
    rng = np.random.default_rng(42)
    for trial in range(20):
        parent = random_parent_map(rng, n=30)
        lines = [f"{c}\t{'-' if p is None else p}" for c, p in parent.items()]
        tax = parse_taxonomy("\n".join(lines) + "\n")
        names = list(parent)
        for _ in range(25):
            a, b = rng.choice(names, size=2)
            assert tax.lca(a, b) == brute_force_lca(parent, a, b), (trial, a, b)


@settings(deadline=None, max_examples=50)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_wup_stays_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    parent = random_parent_map(rng, n=12)
    lines = [f"{c}\t{'-' if p is None else p}" for c, p in parent.items()]
    tax = parse_taxonomy("\n".join(lines) + "\n")
    names = list(parent)
    a, b = rng.choice(names, size=2)
    score = tax.wup(a, b)
    assert 0.0 < score <= 1.0
    assert score == tax.wup(b, a)
    if a == b:
        assert score == 1.0


# ----------------------------------------------------------------------
# lexicon


def test_lexicon_maps_words_to_senses():
    tax = toy()
    lex = parse_lexicon(TOY_LEXICON, tax)
    assert lex.senses("dog") == ["dog"]
    assert lex.senses("missing-word") is None


def test_lexicon_word_with_multiple_senses():
    tax = toy()
    lex = parse_lexicon("puppy\tdog, dalmatian\n", tax)
    assert set(lex.senses("puppy")) == {"dog", "dalmatian"}


def test_lexicon_rejects_unknown_concepts_and_duplicates():
    tax = toy()
    with pytest.raises(FormatError, match="line 1"):
        parse_lexicon("cat\tfeline\n", tax)
    with pytest.raises(FormatError, match="line 2"):
        parse_lexicon("dog\tdog\ndog\tdalmatian\n", tax)
    with pytest.raises(FormatError):
        parse_lexicon("\tdog\n", tax)
    with pytest.raises(FormatError):
        parse_lexicon("word\n", tax)


def test_word_wup_takes_the_best_sense_pair():
    tax = toy()
    lex = parse_lexicon(TOY_LEXICON + "puppy\tdog, dalmatian\n", tax)
    # puppy's best sense against dog is the dog sense itself
    assert word_wup("puppy", "dog", lex, tax) == 1.0
    assert word_wup("dog", "horse", lex, tax) == 0.5
    assert word_wup("dog", "dog", lex, tax) == 1.0


def test_word_wup_falls_back_to_exact_string_match():
    tax = toy()
    lex = parse_lexicon(TOY_LEXICON, tax)
    assert word_wup("zebra", "zebra", lex, tax) == 1.0
    assert word_wup("zebra", "okapi", lex, tax) == 0.0
    # one word covered, the other not: no sense pair, fall back
    assert word_wup("dog", "zebra", lex, tax) == 0.0


def test_word_wup_symmetry_and_bounds():
    tax = toy()
    lex = parse_lexicon(TOY_LEXICON, tax)
    words = ["dog", "horse", "dalmatian", "zebra"]
    for a in words:
        for b in words:
            s = word_wup(a, b, lex, tax)
            assert 0.0 <= s <= 1.0
            assert s == word_wup(b, a, lex, tax)


def test_lexicon_export_parse_round_trip():
    tax = toy()
    lex = parse_lexicon(TOY_LEXICON, tax)
    assert isinstance(lex, Lexicon)
    again = parse_lexicon(TOY_LEXICON, tax)
    assert again.senses("horse") == lex.senses("horse") == ["horse"]
