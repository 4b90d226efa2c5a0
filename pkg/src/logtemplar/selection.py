"""Budgeted per-round annotation selection and the multi-round driver.

Each round scores every unlabeled log two ways: how many other unlabeled
logs sit within its distance radius (representativeness) and how unsure the
model was about it (confidence score). A greedy loop picks the budgeted
subset maximizing

    (1 - lam) * |union of representative sets| / |U|  +  lam * sum of scores

which is monotone submodular, so greedy keeps the usual (1 - 1/e) guarantee.
Budgets shrink adaptively: a round that discovered many new words earns a
smaller follow-up budget.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

import numpy as np

from .confidence import Prediction, confidence_score
from .demonstration import (
    DEFAULT_TOP_K,
    DEMO_CAP,
    CoverageCache,
    select_demos,
    select_demos_topk,
)
from .embedding import DEFAULT_DIM, HashEmbedder, SimilarityContext, cosine
from .errors import AnnotatorUnavailableError, GatewayError, InvalidWordCountsError
from .gateway import Gateway, PromptBundle, build_prompt, failed_prediction
from .model import LogRecord, Template, TypeCatalog
from .similarity import SimilarityIndex

DEFAULT_LAMBDA = 0.5
STATE_VERSION = 1

# Startup budgets anchored to the two published settings; other totals scale.
_STARTUP_ANCHORS = {50: (10, 10), 200: (50, 25)}


@dataclass
class RunConfig:
    """Hyperparameters and wiring for one annotation run."""

    budget: int = 50
    confidence_weight: float = DEFAULT_LAMBDA  # lam: weight on hardness vs coverage
    rep_radius: float = 0.5  # delta: representative-set radius fraction
    prob_weight: float = 0.5  # a: probability term weight inside the score
    sim_threshold: float = 0.0  # tau: word-similarity cosine threshold
    init_budget: int | None = None
    second_budget: int | None = None
    demo_mode: str = "adaptive"  # "adaptive" | "topk"
    demo_top_k: int = DEFAULT_TOP_K
    demo_metric: str = "cosine"  # ranking metric for topk mode
    demo_cap: int = DEMO_CAP
    embed_dim: int = DEFAULT_DIM
    seed: int = 0
    literal_edit_cost: bool = False
    max_rounds: int | None = None
    stall_rounds: int = 3

    def startup_budgets(self) -> tuple[int, int]:
        if self.init_budget is not None and self.second_budget is not None:
            return self.init_budget, self.second_budget
        b0, b1 = default_startup_budgets(self.budget)
        if self.init_budget is not None:
            b0 = self.init_budget
        if self.second_budget is not None:
            b1 = self.second_budget
        return b0, b1

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "confidence_weight": self.confidence_weight,
            "rep_radius": self.rep_radius,
            "prob_weight": self.prob_weight,
            "sim_threshold": self.sim_threshold,
            "init_budget": self.init_budget,
            "second_budget": self.second_budget,
            "demo_mode": self.demo_mode,
            "demo_top_k": self.demo_top_k,
            "demo_metric": self.demo_metric,
            "demo_cap": self.demo_cap,
            "embed_dim": self.embed_dim,
            "seed": self.seed,
            "literal_edit_cost": self.literal_edit_cost,
            "max_rounds": self.max_rounds,
            "stall_rounds": self.stall_rounds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416
        return cls(**{k: v for k, v in data.items() if k in known})


def default_startup_budgets(total: int) -> tuple[int, int]:
    """First two round budgets: published anchors, else total/4 and total/8."""
    if total in _STARTUP_ANCHORS:
        return _STARTUP_ANCHORS[total]
    return max(1, total // 4), max(1, total // 8)


def build_context(config: RunConfig) -> SimilarityContext:
    return SimilarityContext(
        embedder=HashEmbedder(dim=config.embed_dim, seed=config.seed),
        threshold=config.sim_threshold,
    )


# ---------------------------------------------------------------------------
# Objective and greedy selection
# ---------------------------------------------------------------------------


def objective_value(
    chosen: Iterable[int],
    reps: dict[int, frozenset[int]],
    conf: dict[int, float],
    lam: float,
    universe: int,
) -> float:
    """Coverage-plus-hardness value of a chosen set; empty set scores 0."""
    chosen = list(chosen)
    if not chosen:
        return 0.0
    coverage: set[int] = set()
    for log_id in chosen:
        coverage |= reps[log_id]
    return (1.0 - lam) * len(coverage) / universe + lam * sum(conf[i] for i in chosen)


def marginal_gain(
    candidate: int,
    chosen: Iterable[int],
    reps: dict[int, frozenset[int]],
    conf: dict[int, float],
    lam: float,
    universe: int,
) -> float:
    chosen = list(chosen)
    return objective_value(chosen + [candidate], reps, conf, lam, universe) - objective_value(
        chosen, reps, conf, lam, universe
    )


def greedy_select(
    candidates: Iterable[int],
    reps: dict[int, frozenset[int]],
    conf: dict[int, float],
    budget: int,
    lam: float,
    universe: int,
    trace: list[tuple[int, float]] | None = None,
) -> list[int]:
    """Pick up to ``budget`` ids by repeated argmax of marginal gain.

    Ties break toward the lowest id; gains use the incremental coverage set
    so each step costs O(|candidates|).
    """
    remaining = sorted(candidates)
    chosen: list[int] = []
    coverage: set[int] = set()
    limit = min(budget, len(remaining))
    while len(chosen) < limit:
        best_id = -1
        best_gain = -1.0
        for log_id in remaining:
            gain = (1.0 - lam) * len(reps[log_id] - coverage) / universe + lam * conf[log_id]
            if gain > best_gain:
                best_gain = gain
                best_id = log_id
        chosen.append(best_id)
        coverage |= reps[best_id]
        remaining.remove(best_id)
        if trace is not None:
            trace.append((best_id, best_gain))
    return chosen


def select_round(
    pool: list[LogRecord],
    predictions: dict[int, Prediction],
    budget: int,
    sim: SimilarityIndex,
    config: RunConfig,
    trace: list[tuple[int, float]] | None = None,
) -> list[int]:
    """One round of annotation selection over the unlabeled pool.

    Representative sets and confidence scores are computed for the whole
    pool first, then the greedy loop runs against them.
    """
    if budget <= 0 or not pool:
        return []
    record_map = {rec.id: rec for rec in pool}
    reps = {
        rec.id: sim.representative_members(rec, pool, config.rep_radius) for rec in pool
    }
    conf = {
        log_id: confidence_score(record_map[log_id], pred, config.prob_weight).score
        for log_id, pred in predictions.items()
        if log_id in record_map
    }
    for rec in pool:  # logs the gateway never answered score as hardest
        if rec.id not in conf:
            conf[rec.id] = 1.0
    return greedy_select(
        [rec.id for rec in pool],
        reps,
        conf,
        budget,
        config.confidence_weight,
        len(pool),
        trace=trace,
    )


# ---------------------------------------------------------------------------
# Adaptive budget and diversity initialization
# ---------------------------------------------------------------------------


def adaptive_budget(b_prev: int, w_prev: int, w_prev2: int, b_remaining: int) -> int:
    """Next round budget: shrink in proportion to newly identified words.

    Floors the fraction, keeps at least 1 while global budget remains, and
    never exceeds the remaining budget.
    """
    if w_prev <= 0:
        raise InvalidWordCountsError("previous covered-word count must be positive")
    if w_prev2 < 0 or w_prev < w_prev2:
        raise InvalidWordCountsError(
            f"word counts must be non-decreasing: {w_prev2} then {w_prev}"
        )
    delta_w = w_prev - w_prev2
    b_r = math.floor(b_prev * (1.0 - delta_w / w_prev))
    if b_r <= 0 and b_remaining > 0:
        b_r = 1
    return min(b_r, b_remaining)


def diversity_init(logs: list[LogRecord], b0: int, embedder: HashEmbedder) -> list[int]:
    """Farthest-first traversal in log-embedding space.

    Seeds with the log nearest the corpus centroid, then repeatedly adds the
    log whose minimum cosine distance to the chosen set is largest. Ties
    break toward the lowest id.
    """
    if b0 <= 0 or not logs:
        return []
    ordered = sorted(logs, key=lambda rec: rec.id)
    vecs = {rec.id: embedder.embed_log(rec) for rec in ordered}
    centroid = np.mean(list(vecs.values()), axis=0)
    if float(np.linalg.norm(centroid)) == 0.0:
        centroid = vecs[ordered[0].id]

    seed_id = -1
    best_sim = -2.0
    for rec in ordered:
        sim_to_centroid = float(np.dot(vecs[rec.id], centroid) / np.linalg.norm(centroid))
        if sim_to_centroid > best_sim:
            best_sim = sim_to_centroid
            seed_id = rec.id

    chosen = [seed_id]
    min_dist = {
        rec.id: 1.0 - cosine(vecs[rec.id], vecs[seed_id])
        for rec in ordered
        if rec.id != seed_id
    }
    limit = min(b0, len(ordered))
    while len(chosen) < limit:
        best_id = -1
        best_dist = -1.0
        for rec in ordered:
            if rec.id in min_dist and min_dist[rec.id] > best_dist:
                best_dist = min_dist[rec.id]
                best_id = rec.id
        chosen.append(best_id)
        del min_dist[best_id]
        new_vec = vecs[best_id]
        for log_id in min_dist:
            d = 1.0 - cosine(vecs[log_id], new_vec)
            if d < min_dist[log_id]:
                min_dist[log_id] = d
    return chosen


# ---------------------------------------------------------------------------
# Run state
# ---------------------------------------------------------------------------


@dataclass
class RoundState:
    """Summary of one annotation round."""

    index: int
    budget: int
    selected: list[int]
    covered_words: int
    confidence: dict[int, float] = field(default_factory=dict)

    def mean_confidence(self) -> float:
        if not self.confidence:
            return 0.0
        return sum(self.confidence.values()) / len(self.confidence)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "budget": self.budget,
            "selected": list(self.selected),
            "covered_words": self.covered_words,
            "confidence": {str(k): v for k, v in sorted(self.confidence.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoundState":
        return cls(
            index=data["index"],
            budget=data["budget"],
            selected=list(data["selected"]),
            covered_words=data["covered_words"],
            confidence={int(k): float(v) for k, v in data.get("confidence", {}).items()},
        )


@dataclass
class RunState:
    """Whole-run persistence: labeled set, unlabeled pool, round history."""

    config: RunConfig
    labeled: list[tuple[int, Template]] = field(default_factory=list)
    unlabeled: set[int] = field(default_factory=set)
    rounds: list[RoundState] = field(default_factory=list)
    budget_remaining: int = 0
    complete: bool = False

    def labeled_ids(self) -> list[int]:
        return [log_id for log_id, _ in self.labeled]

    def to_dict(self) -> dict:
        return {
            "version": STATE_VERSION,
            "config": self.config.to_dict(),
            "labeled": [[log_id, tmpl.render()] for log_id, tmpl in self.labeled],
            "unlabeled": sorted(self.unlabeled),
            "rounds": [r.to_dict() for r in self.rounds],
            "budget_remaining": self.budget_remaining,
            "complete": self.complete,
        }

    @classmethod
    def from_dict(cls, data: dict, catalog: TypeCatalog) -> "RunState":
        from .model import parse_template

        if data.get("version") != STATE_VERSION:
            raise ValueError(f"unsupported state version {data.get('version')}")
        return cls(
            config=RunConfig.from_dict(data["config"]),
            labeled=[
                (int(log_id), parse_template(text, catalog))
                for log_id, text in data["labeled"]
            ],
            unlabeled=set(int(i) for i in data["unlabeled"]),
            rounds=[RoundState.from_dict(r) for r in data["rounds"]],
            budget_remaining=int(data["budget_remaining"]),
            complete=bool(data.get("complete", False)),
        )


def save_run_state(state: RunState, path: str | Path) -> None:
    """Write the state atomically: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(state.to_dict(), sort_keys=True, indent=2)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".state-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_run_state(path: str | Path, catalog: TypeCatalog) -> RunState:
    with open(path, encoding="utf-8") as fh:
        return RunState.from_dict(json.load(fh), catalog)


# ---------------------------------------------------------------------------
# Multi-round driver
# ---------------------------------------------------------------------------


class Annotator(Protocol):
    """Supplies templates for selected logs; may be a human or the oracle."""

    def annotate(self, log_ids: list[int], round_index: int) -> dict[int, Template]: ...


@dataclass
class RunResult:
    state: RunState
    predictions: dict[int, Prediction]
    final_templates: dict[int, Template | None]
    sources: dict[int, str]
    confidences: dict[int, float]
    prompt_tokens: int


def _predict_pool(
    pool: list[LogRecord],
    labeled_pairs: list[tuple[LogRecord, Template]],
    gateway: Gateway,
    ctx: SimilarityContext,
    config: RunConfig,
    catalog: TypeCatalog,
    round_index: int,
    coverage_cache: CoverageCache,
    labeled_words: frozenset[str],
) -> dict[int, Prediction]:
    prompts: list[PromptBundle] = []
    for rec in sorted(pool, key=lambda r: r.id):
        if config.demo_mode == "topk":
            demos = select_demos_topk(
                rec,
                labeled_pairs,
                ctx,
                k=config.demo_top_k,
                metric=config.demo_metric,
                labeled_words=labeled_words,
            )
        else:
            demos = select_demos(rec, labeled_pairs, ctx, cap=config.demo_cap, cache=coverage_cache)
        prompts.append(build_prompt(rec, demos, catalog))

    def run_one(prompt: PromptBundle) -> Prediction:
        try:
            return gateway.infer(prompt, round_index=round_index)
        except GatewayError as exc:
            return failed_prediction(prompt.target_id, str(exc))

    workers = getattr(getattr(gateway, "config", None), "concurrency", 1)
    if workers > 1 and len(prompts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            results = list(pool_exec.map(run_one, prompts))
    else:
        results = [run_one(p) for p in prompts]
    return {pred.log_id: pred for pred in results}


def run_annotation_loop(
    corpus,
    annotator: Annotator,
    gateway: Gateway,
    config: RunConfig,
    ctx: SimilarityContext | None = None,
    state_path: str | Path | None = None,
    resume: RunState | None = None,
    round_hook: Callable[[RunState], None] | None = None,
) -> RunResult:
    """Drive initialization, prediction, selection, and annotation to completion.

    The loop stops when the budget is exhausted, the pool is empty, or
    selection stalls; a final prediction pass then covers whatever is left
    unlabeled. State is persisted after every round when ``state_path`` is
    given, so a killed run resumes from its last round.
    """
    ctx = ctx or build_context(config)
    records = sorted(corpus.records, key=lambda r: r.id)
    record_map = {rec.id: rec for rec in records}
    catalog = corpus.catalog
    sim = SimilarityIndex(ctx, literal_paper_cost=config.literal_edit_cost)
    coverage_cache = CoverageCache(ctx)

    if resume is not None:
        state = resume
    else:
        state = RunState(
            config=config,
            labeled=[],
            unlabeled={rec.id for rec in records},
            rounds=[],
            budget_remaining=config.budget,
        )

    def labeled_records() -> list[LogRecord]:
        return [record_map[i] for i, _ in state.labeled]

    def labeled_pairs() -> list[tuple[LogRecord, Template]]:
        return [(record_map[i], tmpl) for i, tmpl in state.labeled]

    def persist() -> None:
        if state_path is not None:
            save_run_state(state, state_path)
        if round_hook is not None:
            round_hook(state)

    def absorb(templates: dict[int, Template]) -> None:
        for log_id in sorted(templates):
            state.labeled.append((log_id, templates[log_id]))
            state.unlabeled.discard(log_id)
            catalog.observe(templates[log_id])
        state.budget_remaining -= len(templates)
        sim.set_labeled(labeled_records())

    sim.set_labeled(labeled_records())
    b0, b1 = config.startup_budgets()

    aborted = False
    if not state.rounds:
        init_budget = min(b0, len(records), state.budget_remaining)
        init_ids = diversity_init(records, init_budget, ctx.embedder)
        try:
            templates = annotator.annotate(init_ids, round_index=0)
        except AnnotatorUnavailableError:
            templates = {}
            aborted = True
        if not aborted:
            absorb(templates)
            state.rounds.append(
                RoundState(
                    index=0,
                    budget=init_budget,
                    selected=sorted(templates),
                    covered_words=len(sim.known_words),
                )
            )
            persist()

    stalls = 0
    while not aborted:
        round_index = len(state.rounds)
        if not state.unlabeled or state.budget_remaining <= 0:
            break
        if config.max_rounds is not None and round_index > config.max_rounds:
            break
        pool = [record_map[i] for i in sorted(state.unlabeled)]
        predictions = _predict_pool(
            pool,
            labeled_pairs(),
            gateway,
            ctx,
            config,
            catalog,
            round_index,
            coverage_cache,
            sim.known_words,
        )
        conf_snapshot = {
            rec.id: confidence_score(rec, predictions[rec.id], config.prob_weight).score
            for rec in pool
            if rec.id in predictions
        }
        if round_index == 1:
            budget_r = min(b1, state.budget_remaining)
        else:
            prev = state.rounds[-1]
            prev2 = state.rounds[-2]
            budget_r = adaptive_budget(
                prev.budget, prev.covered_words, prev2.covered_words, state.budget_remaining
            )
        selected = select_round(pool, predictions, budget_r, sim, config)
        if not selected:
            stalls += 1
            if stalls >= config.stall_rounds:
                break
            continue
        stalls = 0
        try:
            templates = annotator.annotate(selected, round_index=round_index)
        except AnnotatorUnavailableError:
            aborted = True
            break
        absorb(templates)
        state.rounds.append(
            RoundState(
                index=round_index,
                budget=budget_r,
                selected=sorted(templates),
                covered_words=len(sim.known_words),
                confidence=conf_snapshot,
            )
        )
        persist()

    # Final pass: predict whatever is still unlabeled with the final context.
    final_round = len(state.rounds)
    pool = [record_map[i] for i in sorted(state.unlabeled)]
    predictions = _predict_pool(
        pool,
        labeled_pairs(),
        gateway,
        ctx,
        config,
        catalog,
        final_round,
        coverage_cache,
        sim.known_words,
    )

    final_templates: dict[int, Template | None] = {}
    sources: dict[int, str] = {}
    confidences: dict[int, float] = {}
    for log_id, tmpl in state.labeled:
        final_templates[log_id] = tmpl
        sources[log_id] = "annotation"
    for rec in pool:
        pred = predictions.get(rec.id)
        final_templates[rec.id] = pred.template if pred is not None else None
        sources[rec.id] = "llm"
        if pred is not None:
            confidences[rec.id] = confidence_score(rec, pred, config.prob_weight).score

    state.complete = not aborted
    persist()
    return RunResult(
        state=state,
        predictions=predictions,
        final_templates=final_templates,
        sources=sources,
        confidences=confidences,
        prompt_tokens=getattr(gateway, "total_prompt_tokens", 0),
    )
