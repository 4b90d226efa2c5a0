import pytest
from hypothesis import given, strategies as st

from logtemplar.confidence import (
    Prediction,
    avg_word_probability,
    confidence_score,
    consistency_indicator,
)
from logtemplar.errors import NoProbabilitiesError
from logtemplar.model import TypeCatalog, parse_template, tokenize_log

CATALOG = TypeCatalog()


def _pred(log_id, template_text, words, probs):
    template = parse_template(template_text, CATALOG) if template_text else None
    return Prediction(
        log_id=log_id,
        template=template,
        regenerated_words=tuple(words),
        word_probs=tuple(probs) if probs is not None else None,
    )


def test_avg_prob_all_ones():
    pred = _pred(0, "<a> <b>", ["a", "b"], [1.0, 1.0])
    assert avg_word_probability(pred) == 1.0


def test_avg_prob_arithmetic():
    pred = _pred(0, "<a> <b>", ["a", "b"], [0.5, 1.0])
    assert avg_word_probability(pred) == 0.75


def test_avg_prob_matches_bruteforce():
    probs = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4]
    pred = _pred(0, "<a> <b> <c> <d> <e> <f>", list("abcdef"), probs)
    assert avg_word_probability(pred) == pytest.approx(sum(probs) / 6)


def test_avg_prob_missing_raises():
    pred = _pred(0, "<a>", ["a"], None)
    with pytest.raises(NoProbabilitiesError):
        avg_word_probability(pred)


def test_consistency_exact_echo():
    log = tokenize_log("a b c", 0)
    pred = _pred(0, "<a> <b> <c>", ["a", "b", "c"], [1, 1, 1])
    assert consistency_indicator(log, pred) == 0


def test_consistency_dropped_suffix():
    log = tokenize_log("rts: kernel terminated for reason 1004", 0)
    pred = _pred(0, "<rts:> <kernel> <terminated>", ["rts:", "kernel", "terminated"], [1, 1, 1])
    assert consistency_indicator(log, pred) == 1


def test_consistency_extra_word():
    log = tokenize_log("a b", 0)
    pred = _pred(0, "<a> <b>", ["a", "b", "b"], [1, 1])
    assert consistency_indicator(log, pred) == 1


def test_consistency_parse_failure_counts_inconsistent():
    log = tokenize_log("a b", 0)
    pred = _pred(0, None, [], None)
    assert consistency_indicator(log, pred) == 1


def test_score_fully_confident():
    log = tokenize_log("a b", 0)
    pred = _pred(0, "<a> <b>", ["a", "b"], [1.0, 1.0])
    report = confidence_score(log, pred, a=0.5)
    assert report.score == 0.0
    assert report.inconsistent == 0


def test_score_maximally_hard():
    log = tokenize_log("a b", 0)
    pred = _pred(0, "<a> <b>", ["a"], [0.0, 0.0])
    report = confidence_score(log, pred, a=0.5)
    assert report.score == 1.0


def test_score_missing_probs_flagged_hardest():
    log = tokenize_log("a b", 0)
    pred = _pred(0, None, [], None)
    report = confidence_score(log, pred, a=0.5)
    assert report.missing_probs
    assert report.avg_prob == 0.0
    assert report.score == 1.0


def test_weight_shifts_ranking_toward_low_probability():
    # One log answered confidently wrong (echo broken), one answered
    # consistently but with low token probability. Growing the probability
    # weight must flip which one looks harder.
    log_lp = tokenize_log("a b", 0)
    pred_lp = _pred(0, "<a> <b>", ["a", "b"], [0.2, 0.2])
    log_ic = tokenize_log("c d", 1)
    pred_ic = _pred(1, "<c> <d>", ["c"], [1.0, 1.0])
    ranks = {}
    for a in (0.2, 0.5, 0.8):
        s_lp = confidence_score(log_lp, pred_lp, a).score
        s_ic = confidence_score(log_ic, pred_ic, a).score
        ranks[a] = s_lp > s_ic
    assert ranks[0.2] is False  # inconsistency dominates at low a
    assert ranks[0.8] is True  # low probability dominates at high a


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_score_bounds_and_monotonicity(p1, p2, a):
    log = tokenize_log("a b", 0)
    lo, hi = sorted([p1, p2])
    consistent = _pred(0, "<a> <b>", ["a", "b"], [hi, hi])
    inconsistent = _pred(0, "<a> <b>", ["a"], [hi, hi])
    r_cons = confidence_score(log, consistent, a)
    r_incons = confidence_score(log, inconsistent, a)
    assert 0.0 <= r_cons.score <= 1.0
    assert r_incons.score >= r_cons.score  # inconsistency never helps
    worse_prob = _pred(0, "<a> <b>", ["a", "b"], [lo, lo])
    assert confidence_score(log, worse_prob, a).score >= r_cons.score
