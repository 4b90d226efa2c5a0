"""Demonstration selection: minimal labeled context per unlabeled log.

Greedy set cover over the target's words: each step adds the labeled log
covering the most still-uncovered words, stopping when nothing helps. A word
is covered when some demo word is similar to it. Full coverage is best
effort; leftovers are reported so the prompt can flag them. A fixed top-k
mode exists for ablation comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import SimilarityContext, cosine
from .model import LogRecord, Template
from .similarity import sed

DEMO_CAP = 16
DEFAULT_TOP_K = 5


@dataclass(frozen=True)
class DemoSet:
    """Chosen demonstrations for one target, in selection order."""

    target: int
    demos: tuple[tuple[LogRecord, Template], ...]
    covered: frozenset[str]
    uncovered: frozenset[str]


def covered_words(demo: LogRecord, target: LogRecord, ctx: SimilarityContext) -> frozenset[str]:
    """Target words having at least one similar word in the demo log."""
    demo_words = set(demo.words)
    out: set[str] = set()
    for w in set(target.words):
        if w in demo_words or any(ctx.similar(w, dw) for dw in demo_words):
            out.add(w)
    return frozenset(out)


class CoverageCache:
    """Memoizes covered_words per (demo id, target id); coverage is pure."""

    def __init__(self, ctx: SimilarityContext):
        self.ctx = ctx
        self._cache: dict[tuple[int, int], frozenset[str]] = {}

    def covered(self, demo: LogRecord, target: LogRecord) -> frozenset[str]:
        key = (demo.id, target.id)
        hit = self._cache.get(key)
        if hit is None:
            hit = covered_words(demo, target, self.ctx)
            self._cache[key] = hit
        return hit


def select_demos(
    target: LogRecord,
    labeled: list[tuple[LogRecord, Template]],
    ctx: SimilarityContext,
    cap: int = DEMO_CAP,
    cache: CoverageCache | None = None,
) -> DemoSet:
    """Greedy cover of the target's words by labeled logs.

    Ties break toward the smaller labeled-log id; the loop ends when no
    remaining labeled log adds coverage or the cap is hit.
    """
    cache = cache or CoverageCache(ctx)
    all_words = frozenset(target.words)
    covered: set[str] = set()
    chosen: list[tuple[LogRecord, Template]] = []
    remaining = sorted(labeled, key=lambda pair: pair[0].id)
    while remaining and len(chosen) < cap and covered != all_words:
        best_gain = 0
        best_idx = -1
        for idx, (log, _tmpl) in enumerate(remaining):
            gain = len(cache.covered(log, target) - covered)
            if gain > best_gain:
                best_gain = gain
                best_idx = idx
        if best_idx < 0:
            break
        log, tmpl = remaining.pop(best_idx)
        covered |= cache.covered(log, target)
        chosen.append((log, tmpl))
    return DemoSet(
        target=target.id,
        demos=tuple(chosen),
        covered=frozenset(covered),
        uncovered=all_words - covered,
    )


def select_demos_topk(
    target: LogRecord,
    labeled: list[tuple[LogRecord, Template]],
    ctx: SimilarityContext,
    k: int = DEFAULT_TOP_K,
    metric: str = "cosine",
    labeled_words: frozenset[str] = frozenset(),
) -> DemoSet:
    """Fixed-size demo set: the k most similar labeled logs to the target.

    metric "sed" ranks by ascending distance, "cosine" by descending log
    embedding similarity; ties break toward the smaller id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if metric == "sed":
        ranked = sorted(
            labeled,
            key=lambda pair: (sed(target, pair[0], labeled_words, ctx), pair[0].id),
        )
    elif metric == "cosine":
        tvec = ctx.embedder.embed_log(target)
        ranked = sorted(
            labeled,
            key=lambda pair: (-cosine(ctx.embedder.embed_log(pair[0]), tvec), pair[0].id),
        )
    else:
        raise ValueError(f"unknown metric {metric!r}")
    chosen = tuple(ranked[:k])
    covered: set[str] = set()
    for log, _tmpl in chosen:
        covered |= covered_words(log, target, ctx)
    all_words = frozenset(target.words)
    return DemoSet(
        target=target.id,
        demos=chosen,
        covered=frozenset(covered & all_words),
        uncovered=all_words - covered,
    )
