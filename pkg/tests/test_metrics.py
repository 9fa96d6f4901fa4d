"""Set-level answer scoring: thresholded similarity and plain accuracy."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imageqa.errors import ConfigurationError, ContractError
from imageqa.metrics import (
    ACCURACY_SENTINEL,
    WupsConfig,
    format_metric_line,
    parse_answer_set,
    set_accuracy,
    thresholded_wup,
    wups_corpus,
    wups_pair,
)
from imageqa.ontology import parse_lexicon, parse_taxonomy, word_wup
from tests.helpers import TOY_LEXICON, TOY_TAXONOMY


@pytest.fixture(scope="module")
def world():
    tax = parse_taxonomy(TOY_TAXONOMY)
    lex = parse_lexicon(TOY_LEXICON, tax)
    return tax, lex


# ----------------------------------------------------------------------
# pieces


def test_parse_answer_set_splits_and_normalises():
    assert parse_answer_set("knife, fork") == {"knife", "fork"}
    assert parse_answer_set("knife") == {"knife"}
    assert parse_answer_set("dog, dog") == {"dog"}
    assert parse_answer_set("  dog  ") == {"dog"}
    assert parse_answer_set("") == set()


def test_thresholded_wup_scales_low_scores(world):
    tax, lex = world
    assert word_wup("dog", "horse", lex, tax) == 0.5
    # 0.5 sits below a 0.9 threshold, so it is multiplied by the penalty
    low = thresholded_wup("dog", "horse", WupsConfig(threshold=0.9), lex, tax)
    assert low == 0.05
    # identical words pass the threshold untouched
    assert thresholded_wup("dog", "dog", WupsConfig(threshold=0.9), lex, tax) == 1.0
    # a zero threshold keeps every raw score
    assert thresholded_wup("dog", "horse", WupsConfig(threshold=0.0), lex, tax) == 0.5


def test_down_weighting_sits_exactly_at_the_boundary(world):
    tax, lex = world
    # wup(dog, dalmatian) = 0.8: at threshold 0.8 the raw score survives
    assert thresholded_wup("dog", "dalmatian", WupsConfig(threshold=0.8), lex, tax) == 0.8
    # one notch higher and it is penalised
    got = thresholded_wup("dog", "dalmatian", WupsConfig(threshold=0.81), lex, tax)
    assert got == pytest.approx(0.08, abs=1e-15)


def test_set_accuracy_is_exact_match_of_sets():
    assert set_accuracy({"dog"}, {"dog"}) == 1.0
    assert set_accuracy({"dog"}, {"horse"}) == 0.0
    assert set_accuracy({"fork", "knife"}, {"knife", "fork"}) == 1.0
    assert set_accuracy({"dog"}, {"dog", "horse"}) == 0.0


# ----------------------------------------------------------------------
# pair scores


def test_identical_sets_score_one(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    assert wups_pair({"knife", "fork"}, {"fork", "knife"}, cfg, lex, tax) == 1.0
    assert wups_pair({"dog"}, {"dog"}, cfg, lex, tax) == 1.0


def test_subset_prediction_pays_on_the_uncovered_truth(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    # prediction covers "dog" exactly; the unmatched truth "horse" is
    # best-matched by dog at 0.5, down-weighted to 0.05, and the
    # truth-side product becomes the minimum of the two directions
    got = wups_pair({"dog"}, {"dog", "horse"}, cfg, lex, tax)
    assert got == pytest.approx(0.05, abs=1e-12)


def test_pair_score_is_symmetric_under_config(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    a = wups_pair({"dog"}, {"horse"}, cfg, lex, tax)
    b = wups_pair({"horse"}, {"dog"}, cfg, lex, tax)
    assert a == b == pytest.approx(0.05, abs=1e-12)


def test_empty_sets_are_rejected(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    with pytest.raises(ContractError):
        wups_pair(set(), {"dog"}, cfg, lex, tax)
    with pytest.raises(ContractError):
        wups_pair({"dog"}, set(), cfg, lex, tax)


def reference_wups(pred, truth, tax, lex, tau):
    """Independent reimplementation: min over directions of the product of
    best thresholded matches."""

    def best(a, others):
        return max(word_wup(a, b, lex, tax) for b in others)

    def side(source, target):
        prod = 1.0
        for a in source:
            s = best(a, target)
            prod *= s if s >= tau else 0.1 * s
        return prod

    return min(side(pred, truth), side(truth, pred))


def test_pair_matches_brute_force_on_random_sets(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    rng = np.random.default_rng(7)
    pool = ["dog", "horse", "dalmatian", "animal", "zebra", "fork"]
    for _ in range(100):
        pred = set(rng.choice(pool, size=rng.integers(1, 4), replace=False))
        truth = set(rng.choice(pool, size=rng.integers(1, 4), replace=False))
        got = wups_pair(pred, truth, cfg, lex, tax)
        want = reference_wups(pred, truth, tax, lex, 0.9)
        assert got == pytest.approx(want, abs=1e-12), (pred, truth)


# ----------------------------------------------------------------------
# corpus scores


def test_corpus_score_is_the_mean_of_pair_scores(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    preds = ["dog", "dog, horse", "dalmatian"]
    truths = ["dog", "dog, horse", "dog"]
    per_pair = [
        wups_pair(parse_answer_set(p), parse_answer_set(t), cfg, lex, tax)
        for p, t in zip(preds, truths)
    ]
    got = wups_corpus(preds, truths, cfg, lex, tax)
    assert got == pytest.approx(sum(per_pair) / 3, abs=1e-12)


def test_accuracy_sentinel_switches_to_exact_match(world):
    tax, lex = world
    cfg = WupsConfig(threshold=ACCURACY_SENTINEL)
    assert cfg.accuracy_mode
    preds = ["dog", "horse", "fork, knife"]
    truths = ["dog", "dog", "knife, fork"]
    got = wups_corpus(preds, truths, cfg, lex, tax)
    assert got == pytest.approx(2 / 3, abs=1e-12)


def test_accuracy_mode_needs_no_ontology():
    cfg = WupsConfig(threshold=ACCURACY_SENTINEL)
    got = wups_corpus(["a"], ["a"], cfg, None, None)
    assert got == 1.0


def test_soft_mode_requires_the_ontology(world):
    cfg = WupsConfig(threshold=0.9)
    with pytest.raises(ContractError):
        wups_corpus(["a"], ["a"], cfg, None, None)


def test_corpus_length_mismatch_and_empty_are_rejected(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    with pytest.raises(ContractError):
        wups_corpus(["a"], ["a", "b"], cfg, lex, tax)
    with pytest.raises(ContractError):
        wups_corpus([], [], cfg, lex, tax)


def test_unparseable_pair_is_rejected(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    with pytest.raises(ContractError):
        wups_corpus([""], ["dog"], cfg, lex, tax)


def test_toy_corpus_hand_mean(world):
    tax, lex = world
    cfg = WupsConfig(threshold=0.9)
    # pair 1: dog vs horse -> 0.05; pair 2: dalmatian vs dog -> 0.08
    got = wups_corpus(["dog", "dalmatian"], ["horse", "dog"], cfg, lex, tax)
    assert got == pytest.approx((0.05 + 0.08) / 2, abs=1e-12)


# ----------------------------------------------------------------------
# config and output


def test_wups_config_validation():
    with pytest.raises(ConfigurationError):
        WupsConfig(threshold=1.5)
    with pytest.raises(ConfigurationError):
        WupsConfig(threshold=-0.5)  # only the exact sentinel is allowed
    with pytest.raises(ConfigurationError):
        WupsConfig(threshold=0.9, penalty=-0.1)
    assert WupsConfig(threshold=ACCURACY_SENTINEL).accuracy_mode
    assert not WupsConfig(threshold=0.0).accuracy_mode


def test_metric_line_format():
    assert (
        format_metric_line("wups", 0.9, 0.1234567)
        == "metric=wups tau=0.9 value=0.123457"
    )
    assert (
        format_metric_line("acc", -1.0, 1.0) == "metric=acc tau=-1 value=1.000000"
    )
    assert format_metric_line("wups", 0.0, 0.5) == "metric=wups tau=0 value=0.500000"


@settings(deadline=None, max_examples=60)
@given(
    pred=st.sets(st.sampled_from(["dog", "horse", "dalmatian", "x"]), min_size=1),
    truth=st.sets(st.sampled_from(["dog", "horse", "dalmatian", "x"]), min_size=1),
)
def test_pair_symmetry_and_bounds_hold_generally(pred, truth):
    tax = parse_taxonomy(TOY_TAXONOMY)
    lex = parse_lexicon(TOY_LEXICON, tax)
    cfg = WupsConfig(threshold=0.9)
    s = wups_pair(pred, truth, cfg, lex, tax)
    assert 0.0 <= s <= 1.0
    assert s == wups_pair(truth, pred, cfg, lex, tax)
    if pred == truth:
        assert s == 1.0
