"""Semantic edit distance over residual words, and representative sets.

Distance is computed between the *residuals* of two logs: the words not yet
seen in any labeled log. Substituting two similar words is free, so logs that
differ only in already-identified boilerplate or in interchangeable variables
come out close. The printed form of the cost function (similar words cost 1)
contradicts its own worked example; the default here follows the example, and
``literal_paper_cost=True`` restores the printed behavior for audit runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .embedding import SimilarityContext
from .errors import InvalidDeltaError
from .model import LogRecord

DEFAULT_DELTA = 0.5


@dataclass(frozen=True)
class ResidualLog:
    """Words of a source log that no labeled log contains, in source order."""

    source: int
    residual_words: tuple[str, ...]


@dataclass
class BipartiteIndex:
    """Log-word incidence in both directions."""

    log_to_words: dict[int, frozenset[str]] = field(default_factory=dict)
    word_to_logs: dict[str, set[int]] = field(default_factory=dict)

    def edge_count(self) -> int:
        return sum(len(ws) for ws in self.log_to_words.values())

    def words_of(self, log_id: int) -> frozenset[str]:
        return self.log_to_words[log_id]


@dataclass(frozen=True)
class RepresentativeSet:
    """Unlabeled logs within a delta-scaled distance radius of the anchor."""

    anchor: int
    members: frozenset[int]
    delta: float


def build_bipartite(pool: Iterable[LogRecord]) -> BipartiteIndex:
    index = BipartiteIndex()
    for log in pool:
        words = frozenset(log.words)
        index.log_to_words[log.id] = words
        for word in words:
            index.word_to_logs.setdefault(word, set()).add(log.id)
    return index


def identified_words(labeled: Iterable[LogRecord]) -> frozenset[str]:
    """Union of words across labeled logs."""
    out: set[str] = set()
    for log in labeled:
        out.update(log.words)
    return frozenset(out)


def residual(log: LogRecord, labeled: Iterable[LogRecord] | frozenset[str]) -> ResidualLog:
    """Drop every word that appears verbatim in any labeled log."""
    known = labeled if isinstance(labeled, frozenset) else identified_words(labeled)
    kept = tuple(w for w in log.words if w not in known)
    return ResidualLog(source=log.id, residual_words=kept)


def word_cost(
    w1: str,
    w2: str,
    ctx: SimilarityContext,
    literal_paper_cost: bool = False,
) -> int:
    """Substitution cost between two words: 0 when similar, 1 otherwise.

    With literal_paper_cost the polarity flips (similar words cost 1).
    """
    sim = ctx.similar(w1, w2)
    if literal_paper_cost:
        return 1 if sim else 0
    return 0 if sim else 1


def _sed_table(
    a: tuple[str, ...],
    b: tuple[str, ...],
    ctx: SimilarityContext,
    literal_paper_cost: bool,
) -> int:
    """Standard O(|a|*|b|) rolling-row edit distance with the word cost."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        wa = a[i - 1]
        for j in range(1, len(b) + 1):
            sub = prev[j - 1] + word_cost(wa, b[j - 1], ctx, literal_paper_cost)
            cur[j] = min(sub, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[-1]


def sed(
    s_i: LogRecord,
    s_j: LogRecord,
    labeled: Iterable[LogRecord] | frozenset[str],
    ctx: SimilarityContext,
    literal_paper_cost: bool = False,
) -> int:
    """Semantic edit distance between the residuals of two logs."""
    known = labeled if isinstance(labeled, frozenset) else identified_words(labeled)
    a = residual(s_i, known).residual_words
    b = residual(s_j, known).residual_words
    return _sed_table(a, b, ctx, literal_paper_cost)


def sed_reference(
    a: tuple[str, ...],
    b: tuple[str, ...],
    ctx: SimilarityContext,
    literal_paper_cost: bool = False,
) -> int:
    """Memo-free recursive evaluation of the distance recurrence.

    Exponential; exists as an independent oracle for the table version and
    is only usable on short residuals.
    """

    def rec(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        return min(
            rec(i + 1, j + 1) + word_cost(a[i], b[j], ctx, literal_paper_cost),
            rec(i + 1, j) + 1,
            rec(i, j + 1) + 1,
        )

    return rec(0, 0)


def representative_set(
    anchor: LogRecord,
    pool: Iterable[LogRecord],
    labeled: Iterable[LogRecord] | frozenset[str],
    ctx: SimilarityContext,
    delta: float = DEFAULT_DELTA,
    literal_paper_cost: bool = False,
) -> RepresentativeSet:
    """Pool members within distance delta * min(full word counts) of anchor.

    Lengths are full log lengths, not residual lengths, so two logs must
    share structure (or have everything identified) to represent each other.
    """
    if not (0.0 < delta <= 1.0):
        raise InvalidDeltaError(f"delta {delta} outside (0, 1]")
    known = labeled if isinstance(labeled, frozenset) else identified_words(labeled)
    members: set[int] = set()
    for other in pool:
        bound = delta * min(len(anchor.words), len(other.words))
        if sed(anchor, other, known, ctx, literal_paper_cost) <= bound:
            members.add(other.id)
    return RepresentativeSet(anchor=anchor.id, members=frozenset(members), delta=delta)


class SimilarityIndex:
    """Distance and residual caches tied to a labeled-set version.

    The per-round selection recomputes distances across the unlabeled pool;
    caching by (pair, labeled version) keeps that quadratic pass cheap. The
    version bumps whenever the labeled set grows, which invalidates residuals
    and distances together.
    """

    def __init__(self, ctx: SimilarityContext, literal_paper_cost: bool = False):
        self.ctx = ctx
        self.literal_paper_cost = literal_paper_cost
        self._known: frozenset[str] = frozenset()
        self._version = 0
        self._residuals: dict[int, tuple[str, ...]] = {}
        self._distances: dict[tuple[int, int], int] = {}

    @property
    def version(self) -> int:
        return self._version

    @property
    def known_words(self) -> frozenset[str]:
        return self._known

    def set_labeled(self, labeled: Iterable[LogRecord]) -> None:
        known = identified_words(labeled)
        if known != self._known:
            self._known = known
            self._version += 1
            self._residuals.clear()
            self._distances.clear()

    def residual_of(self, log: LogRecord) -> tuple[str, ...]:
        cached = self._residuals.get(log.id)
        if cached is None:
            cached = tuple(w for w in log.words if w not in self._known)
            self._residuals[log.id] = cached
        return cached

    def distance(self, a: LogRecord, b: LogRecord) -> int:
        key = (a.id, b.id) if a.id <= b.id else (b.id, a.id)
        hit = self._distances.get(key)
        if hit is None:
            hit = _sed_table(
                self.residual_of(a), self.residual_of(b), self.ctx, self.literal_paper_cost
            )
            self._distances[key] = hit
        return hit

    def representative_members(
        self, anchor: LogRecord, pool: list[LogRecord], delta: float
    ) -> frozenset[int]:
        if not (0.0 < delta <= 1.0):
            raise InvalidDeltaError(f"delta {delta} outside (0, 1]")
        members: set[int] = set()
        alen = len(anchor.words)
        for other in pool:
            if self.distance(anchor, other) <= delta * min(alen, len(other.words)):
                members.add(other.id)
        return frozenset(members)
