"""Soft evaluation of answer sets against ground truth (WUPS).

Answers are word sets; a pair scores the minimum of two direction
products, each taking the best (thresholded) word similarity available.
Below-threshold similarities are down-weighted rather than zeroed, and a
threshold of -1 switches the corpus measure to plain set equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigurationError, ContractError
from .ontology import Lexicon, Taxonomy, word_wup

ACCURACY_SENTINEL = -1.0


@dataclass
class WupsConfig:
    threshold: float = 0.9  # -1 switches to exact set accuracy
    penalty: float = 0.1
    delimiter: str = ", "

    def __post_init__(self):
        if self.threshold != ACCURACY_SENTINEL and not 0.0 <= self.threshold <= 1.0:
            raise ConfigurationError(
                f"threshold must be in [0, 1] or -1, got {self.threshold}"
            )
        if not 0.0 <= self.penalty <= 1.0:
            raise ConfigurationError(f"penalty must be in [0, 1], got {self.penalty}")

    @property
    def accuracy_mode(self) -> bool:
        return self.threshold == ACCURACY_SENTINEL


def parse_answer_set(line: str, delimiter: str = ", ") -> set[str]:
    """Split an answer line into its word set; duplicates collapse."""
    return {w.strip() for w in line.split(delimiter) if w.strip()}


def thresholded_wup(
    word_a: str,
    word_b: str,
    config: WupsConfig,
    lexicon: Lexicon,
    taxonomy: Taxonomy,
) -> float:
    """Word similarity, down-weighted by the penalty when below threshold."""
    score = word_wup(word_a, word_b, lexicon, taxonomy)
    return score if score >= config.threshold else config.penalty * score


def set_accuracy(predicted: set[str], truth: set[str]) -> float:
    """1.0 on exact set equality, else 0.0."""
    return 1.0 if set(predicted) == set(truth) else 0.0


def wups_pair(
    predicted: set[str],
    truth: set[str],
    config: WupsConfig,
    lexicon: Lexicon,
    taxonomy: Taxonomy,
) -> float:
    """min over both directions of the product of best word matches."""
    if not predicted or not truth:
        raise ContractError("wups needs non-empty answer sets on both sides")

    def direction(from_set: set[str], to_set: set[str]) -> float:
        product = 1.0
        for a in from_set:
            product *= max(
                thresholded_wup(a, b, config, lexicon, taxonomy) for b in to_set
            )
        return product

    return min(direction(predicted, truth), direction(truth, predicted))


def wups_corpus(
    predicted_lines: Sequence[str],
    truth_lines: Sequence[str],
    config: WupsConfig,
    lexicon: Lexicon | None = None,
    taxonomy: Taxonomy | None = None,
) -> float:
    """Mean pair score; with the -1 sentinel this is exact-set accuracy."""
    if len(predicted_lines) != len(truth_lines):
        raise ContractError(
            f"{len(predicted_lines)} predictions for {len(truth_lines)} truths"
        )
    if len(predicted_lines) == 0:
        raise ContractError("cannot score an empty corpus")
    total = 0.0
    for pred_line, truth_line in zip(predicted_lines, truth_lines):
        pred = parse_answer_set(pred_line, config.delimiter)
        truth = parse_answer_set(truth_line, config.delimiter)
        if not pred or not truth:
            raise ContractError(
                f"unparseable answer pair: '{pred_line}' vs '{truth_line}'"
            )
        if config.accuracy_mode:
            total += set_accuracy(pred, truth)
        else:
            if lexicon is None or taxonomy is None:
                raise ContractError("soft scoring needs a lexicon and a taxonomy")
            total += wups_pair(pred, truth, config, lexicon, taxonomy)
    return total / len(predicted_lines)


def format_metric_line(name: str, tau: float, value: float) -> str:
    return f"metric={name} tau={tau:g} value={value:.6f}"
