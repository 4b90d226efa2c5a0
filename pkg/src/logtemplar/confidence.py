"""Prediction confidence: average word probability plus a consistency bit.

A prediction is scored by how sure the model was per template token and by
whether it echoed the input words back exactly. High scores mark logs the
model finds hard; those are the ones worth spending annotation budget on.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoProbabilitiesError
from .model import LogRecord, Template

DEFAULT_PROB_WEIGHT = 0.5


@dataclass(frozen=True)
class Prediction:
    """LLM output for one log.

    ``template`` is None when the response violated the output contract;
    such predictions score as maximally hard downstream.
    """

    log_id: int
    template: Template | None
    regenerated_words: tuple[str, ...]
    word_probs: tuple[float, ...] | None
    raw_response: str = ""

    @property
    def parse_failed(self) -> bool:
        return self.template is None


@dataclass(frozen=True)
class ConfidenceReport:
    log_id: int
    avg_prob: float
    inconsistent: int
    score: float
    weight_a: float
    missing_probs: bool = False


def avg_word_probability(pred: Prediction) -> float:
    """Arithmetic mean of the per-token probabilities of the predicted template."""
    if not pred.word_probs:
        raise NoProbabilitiesError(f"prediction for log {pred.log_id} has no probabilities")
    return sum(pred.word_probs) / len(pred.word_probs)


def consistency_indicator(log: LogRecord, pred: Prediction) -> int:
    """0 when the regenerated words equal the input exactly, else 1.

    An unparseable response counts as inconsistent: the words were not
    echoed in the required form.
    """
    if pred.parse_failed:
        return 1
    return 0 if pred.regenerated_words == log.words else 1


def confidence_score(
    log: LogRecord, pred: Prediction, a: float = DEFAULT_PROB_WEIGHT
) -> ConfidenceReport:
    """score = a * (1 - avg_prob) + (1 - a) * inconsistent, in [0, 1].

    Larger means harder. When probabilities are missing the average is
    treated as 0 (hardest) and flagged on the report.
    """
    if not (0.0 <= a <= 1.0):
        raise ValueError(f"weight a={a} outside [0, 1]")
    inconsistent = consistency_indicator(log, pred)
    missing = False
    try:
        avg = avg_word_probability(pred)
    except NoProbabilitiesError:
        avg = 0.0
        missing = True
    score = a * (1.0 - avg) + (1.0 - a) * inconsistent
    return ConfidenceReport(
        log_id=log.id,
        avg_prob=avg,
        inconsistent=inconsistent,
        score=score,
        weight_a=a,
        missing_probs=missing,
    )
