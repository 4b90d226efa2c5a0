import random

import pytest
from hypothesis import given, settings, strategies as st

from logtemplar.embedding import HashEmbedder, SimilarityContext, cosine
from logtemplar.errors import InvalidDeltaError
from logtemplar.model import LogRecord, tokenize_log
from logtemplar.similarity import (
    SimilarityIndex,
    build_bipartite,
    identified_words,
    representative_set,
    residual,
    sed,
    sed_reference,
    word_cost,
)

EMB = HashEmbedder()
# cosine(POST, GET) is exactly 0.0 with the shipped provider, so tau=0.25
# separates unrelated words while keeping e.g. blk_1000/blk_2000 similar.
CTX = SimilarityContext(embedder=EMB, threshold=0.25)


def _log(text: str, log_id: int = 0) -> LogRecord:
    return tokenize_log(text, log_id)


def test_residual_empty_labeled():
    s = _log("a b c")
    assert residual(s, frozenset()).residual_words == ("a", "b", "c")


def test_residual_fully_covered():
    s = _log("a b")
    labeled = [_log("b x", 1), _log("a y", 2)]
    assert residual(s, labeled).residual_words == ()


def test_residual_removes_identified_ip():
    s = _log("proxy.cse.cuhk.edu.hk:5070 POST")
    labeled = [_log("proxy.cse.cuhk.edu.hk:5070 up", 1)]
    assert residual(s, labeled).residual_words == ("POST",)


def test_word_cost_identical_free():
    assert word_cost("GET", "GET", CTX) == 0


def test_word_cost_dissimilar_pair():
    assert cosine(EMB.embed_word("GET"), EMB.embed_word("1004")) < 0.25
    assert word_cost("GET", "1004", CTX) == 1


def test_word_cost_literal_flag_flips():
    literal = True
    assert word_cost("GET", "GET", CTX, literal) == 1
    assert word_cost("GET", "1004", CTX, literal) == 0


def test_sed_self_zero():
    s = _log("alpha beta 17")
    assert sed(s, s, frozenset(), CTX) == 0


def test_sed_worked_example_with_identified_ips():
    target = _log("com.cse.ust.hk:8080 POST", 0)
    same_template = _log("proxy.cse.cuhk.edu.hk:5070 POST", 1)
    other_keyword = _log("com.cse.ust.hk:8080 GET", 2)
    labeled = [
        _log("com.cse.ust.hk:8080 up", 10),
        _log("proxy.cse.cuhk.edu.hk:5070 up", 11),
    ]
    known = identified_words(labeled)
    assert sed(target, same_template, known, CTX) == 0
    assert sed(target, other_keyword, known, CTX) > 0


WORD_POOL = ["POST", "GET", "up", "down", "blk_10", "blk_77", "x1", "request", "0", "42"]


def _random_pair(rng: random.Random, max_len: int = 8):
    a = tuple(rng.choice(WORD_POOL) for _ in range(rng.randint(0, max_len)))
    b = tuple(rng.choice(WORD_POOL) for _ in range(rng.randint(0, max_len)))
    return a, b


def test_dp_matches_naive_recursion_on_random_pairs():
    # Oracle: memo-free recursive evaluation of the distance recurrence.
    rng = random.Random(7)
    for i in range(120):
        a, b = _random_pair(rng, max_len=6)
        ra = LogRecord(id=0, words=a or ("pad",), raw=" ".join(a) or "pad")
        rb = LogRecord(id=1, words=b or ("pad",), raw=" ".join(b) or "pad")
        got = sed(ra, rb, frozenset(), CTX)
        want = sed_reference(ra.words, rb.words, CTX)
        assert got == want, f"pair {i}: {ra.words} vs {rb.words}"


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.sampled_from(WORD_POOL), min_size=1, max_size=5),
    st.lists(st.sampled_from(WORD_POOL), min_size=1, max_size=5),
)
def test_sed_symmetry_and_bound(a_words, b_words):
    a = LogRecord(id=0, words=tuple(a_words), raw=" ".join(a_words))
    b = LogRecord(id=1, words=tuple(b_words), raw=" ".join(b_words))
    d_ab = sed(a, b, frozenset(), CTX)
    d_ba = sed(b, a, frozenset(), CTX)
    assert d_ab == d_ba
    assert 0 <= d_ab <= max(len(a_words), len(b_words))


def test_residual_shrinks_as_labeled_grows():
    s = _log("a b c d")
    stages = [
        [],
        [_log("c x", 1)],
        [_log("c x", 1), _log("a y", 2)],
        [_log("c x", 1), _log("a y", 2), _log("b d", 3)],
    ]
    lengths = [len(residual(s, identified_words(stage)).residual_words) for stage in stages]
    assert lengths == sorted(lengths, reverse=True)


def test_representative_set_reflexive_singleton():
    anchor = _log("a b c", 5)
    rep = representative_set(anchor, [anchor], frozenset(), CTX, delta=0.5)
    assert rep.members == frozenset({5})


def test_representative_set_invalid_delta():
    anchor = _log("a b", 0)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(InvalidDeltaError):
            representative_set(anchor, [anchor], frozenset(), CTX, delta=bad)


def test_representative_set_matches_pairwise_oracle():
    rng = random.Random(21)
    pool = []
    for i in range(12):
        n = rng.randint(2, 6)
        words = [rng.choice(WORD_POOL) for _ in range(n)]
        pool.append(LogRecord(id=i, words=tuple(words), raw=" ".join(words)))
    labeled = [pool[0]]
    known = identified_words(labeled)
    for anchor in pool:
        rep = representative_set(anchor, pool, known, CTX, delta=0.5)
        expected = {
            other.id
            for other in pool
            if sed(anchor, other, known, CTX)
            <= 0.5 * min(len(anchor.words), len(other.words))
        }
        assert rep.members == frozenset(expected)


def test_bipartite_edges():
    logs = [_log("a b c", 0)]
    index = build_bipartite(logs)
    assert index.edge_count() == 3


def test_bipartite_shared_word():
    logs = [_log("x POST", 0), _log("y POST", 1)]
    index = build_bipartite(logs)
    assert index.word_to_logs["POST"] == {0, 1}


def test_bipartite_edge_count_recount():
    rng = random.Random(3)
    logs = []
    for i in range(20):
        words = [rng.choice(WORD_POOL) for _ in range(rng.randint(1, 7))]
        logs.append(LogRecord(id=i, words=tuple(words), raw=" ".join(words)))
    index = build_bipartite(logs)
    assert index.edge_count() == sum(len(set(log.words)) for log in logs)
    for log in logs:
        for word in set(log.words):
            assert log.id in index.word_to_logs[word]


def test_similarity_index_cache_invalidation():
    a = _log("a b c", 0)
    b = _log("a b d", 1)
    sim = SimilarityIndex(CTX)
    sim.set_labeled([])
    before = sim.distance(a, b)
    sim.set_labeled([_log("c d x", 9)])
    after = sim.distance(a, b)
    assert before >= after  # shared words got identified, residuals shrank
    assert sim.version == 1
