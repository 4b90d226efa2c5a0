"""Command-line entry points: run, eval, inspect, serve.

Flags mirror the run-config fields in kebab-case; a ``key = value`` config
file can seed them, with flags taking precedence. A run writes four
artifacts into the output directory: runstate.json, predictions.jsonl,
report.json, and rounds.csv.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import Corpus, OracleAnnotator, evaluate, ingest
from .demonstration import select_demos, select_demos_topk
from .errors import LogTemplarError, UnknownIdError
from .gateway import FaultProfile, GatewayConfig, MockGateway, RemoteGateway
from .model import parse_template
from .selection import (
    RunConfig,
    RunResult,
    build_context,
    greedy_select,
    load_run_state,
    run_annotation_loop,
    save_run_state,
)
from .similarity import SimilarityIndex


def parse_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment, values are JSON-ish."""
    values: dict = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise LogTemplarError(f"config line without '=': {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip().strip('"').strip("'")
        if value.lower() in ("true", "false"):
            values[key] = value.lower() == "true"
        else:
            try:
                values[key] = int(value)
            except ValueError:
                try:
                    values[key] = float(value)
                except ValueError:
                    values[key] = value
    return values


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="corpus file (.csv or .jsonl)")
    parser.add_argument("--format", default="auto", choices=["auto", "logpai_csv", "jsonl"])
    parser.add_argument("--config-file", default=None, help="key=value config file")
    parser.add_argument("--output-dir", default="out")
    parser.add_argument("--budget", type=int, default=None)
    parser.add_argument("--confidence-weight", type=float, default=None)
    parser.add_argument("--rep-radius", type=float, default=None)
    parser.add_argument("--prob-weight", type=float, default=None)
    parser.add_argument("--sim-threshold", type=float, default=None)
    parser.add_argument("--init-budget", type=int, default=None)
    parser.add_argument("--second-budget", type=int, default=None)
    parser.add_argument("--demo-mode", choices=["adaptive", "topk"], default=None)
    parser.add_argument("--demo-top-k", type=int, default=None)
    parser.add_argument("--demo-metric", choices=["cosine", "sed"], default=None)
    parser.add_argument("--embed-dim", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--max-rounds", type=int, default=None)
    parser.add_argument(
        "--literal-edit-cost",
        action="store_true",
        default=None,
        help="use the inverted substitution-cost polarity (audit mode)",
    )
    parser.add_argument("--annotator", choices=["oracle", "interactive"], default="oracle")
    parser.add_argument("--gateway", choices=["mock", "remote"], default="mock")
    parser.add_argument("--endpoint", default="")
    parser.add_argument("--model", default="")
    parser.add_argument("--transcript", default=None, help="record/replay transcript path")
    parser.add_argument("--replay", action="store_true", help="serve responses from transcript")
    parser.add_argument("--generation-error-rate", type=float, default=0.0)
    parser.add_argument("--word-error-rate", type=float, default=0.0)
    parser.add_argument("--prob-penalty", type=float, default=0.5)
    parser.add_argument("--resume", default=None, help="runstate.json to resume from")


def build_run_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config_file:
        base.update(parse_config_file(args.config_file))
    config = RunConfig.from_dict(base)
    overrides = {
        "budget": args.budget,
        "confidence_weight": args.confidence_weight,
        "rep_radius": args.rep_radius,
        "prob_weight": args.prob_weight,
        "sim_threshold": args.sim_threshold,
        "init_budget": args.init_budget,
        "second_budget": args.second_budget,
        "demo_mode": args.demo_mode,
        "demo_top_k": args.demo_top_k,
        "demo_metric": args.demo_metric,
        "embed_dim": args.embed_dim,
        "seed": args.seed,
        "max_rounds": args.max_rounds,
        "literal_edit_cost": args.literal_edit_cost,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    return config


def build_gateway(args: argparse.Namespace, corpus: Corpus, ctx, config: RunConfig):
    if args.gateway == "mock":
        profile = FaultProfile(
            generation_error_rate=args.generation_error_rate,
            word_error_rate=args.word_error_rate,
            unseen_keyword_prob_penalty=args.prob_penalty,
            seed=config.seed,
        )
        if not corpus.has_ground_truth():
            raise LogTemplarError("mock gateway requires a corpus with ground truth")
        return MockGateway(corpus.ground_truth, corpus.catalog, ctx, profile)
    gateway_cfg = GatewayConfig(
        kind="remote",
        endpoint=args.endpoint,
        model=args.model,
        transcript_path=args.transcript,
        replay=args.replay,
    )
    return RemoteGateway(gateway_cfg, corpus.catalog)


def write_artifacts(result: RunResult, corpus: Corpus, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_run_state(result.state, out_dir / "runstate.json")

    with open(out_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for rec in sorted(corpus.records, key=lambda r: r.id):
            pred = result.predictions.get(rec.id)
            tmpl = result.final_templates.get(rec.id)
            row = {
                "confidence": result.confidences.get(rec.id),
                "id": rec.id,
                "probs": list(pred.word_probs) if pred is not None and pred.word_probs else None,
                "source": result.sources.get(rec.id, "llm"),
                "template": tmpl.render() if tmpl is not None else None,
                "words": list(pred.regenerated_words) if pred is not None else None,
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    with open(out_dir / "rounds.csv", "w", encoding="utf-8") as fh:
        fh.write("round,budget,selected,covered_words,mean_confidence\n")
        for rnd in result.state.rounds:
            fh.write(
                f"{rnd.index},{rnd.budget},{len(rnd.selected)},"
                f"{rnd.covered_words},{rnd.mean_confidence():.6f}\n"
            )

    if corpus.has_ground_truth():
        report = evaluate(result.final_templates, corpus)
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        print(report.table())


def cmd_run(args: argparse.Namespace) -> int:
    corpus = ingest(args.corpus, args.format)
    config = build_run_config(args)
    ctx = build_context(config)
    gateway = build_gateway(args, corpus, ctx, config)
    if args.annotator == "oracle":
        if not corpus.has_ground_truth():
            print("error: oracle annotator requires ground truth", file=sys.stderr)
            return 2
        annotator = OracleAnnotator(corpus)
    else:
        print("error: interactive annotation runs under `logtemplar serve`", file=sys.stderr)
        return 2
    resume = None
    if args.resume:
        resume = load_run_state(args.resume, corpus.catalog)
    out_dir = Path(args.output_dir)
    result = run_annotation_loop(
        corpus,
        annotator,
        gateway,
        config,
        ctx=ctx,
        state_path=out_dir / "runstate.json",
        resume=resume,
    )
    write_artifacts(result, corpus, out_dir)
    print(
        f"annotated {len(result.state.labeled)} logs over {len(result.state.rounds)} rounds; "
        f"prompt tokens {result.prompt_tokens}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = ingest(args.corpus, args.format)
    predictions: dict = {}
    with open(args.predictions, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            text = row.get("template")
            if text:
                predictions[int(row["id"])] = parse_template(text, corpus.catalog)
    report = evaluate(predictions, corpus)
    print(report.table())
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
    return 0


def _load_state_context(args: argparse.Namespace, corpus: Corpus):
    config = RunConfig()
    labeled_pairs = []
    state = None
    if args.state:
        state = load_run_state(args.state, corpus.catalog)
        config = state.config
        record_map = corpus.record_map()
        labeled_pairs = [(record_map[i], tmpl) for i, tmpl in state.labeled]
    ctx = build_context(config)
    sim = SimilarityIndex(ctx, literal_paper_cost=config.literal_edit_cost)
    sim.set_labeled([rec for rec, _ in labeled_pairs])
    return config, ctx, sim, labeled_pairs, state


def cmd_inspect(args: argparse.Namespace) -> int:
    corpus = ingest(args.corpus, args.format)
    record_map = corpus.record_map()
    config, ctx, sim, labeled_pairs, state = _load_state_context(args, corpus)

    if args.what == "sed":
        try:
            a = record_map[args.id_a]
            b = record_map[args.id_b]
        except KeyError as exc:
            raise UnknownIdError(str(exc)) from exc
        print(f"log {a.id}: {a.text}")
        print(f"log {b.id}: {b.text}")
        print(f"residual {a.id}: {' '.join(sim.residual_of(a)) or '(empty)'}")
        print(f"residual {b.id}: {' '.join(sim.residual_of(b)) or '(empty)'}")
        print(f"distance: {sim.distance(a, b)}")
        return 0

    if args.what == "demos":
        target = record_map.get(args.id_a)
        if target is None:
            raise UnknownIdError(f"no log with id {args.id_a}")
        if config.demo_mode == "topk":
            demos = select_demos_topk(
                target, labeled_pairs, ctx, k=config.demo_top_k,
                metric=config.demo_metric, labeled_words=sim.known_words,
            )
        else:
            demos = select_demos(target, labeled_pairs, ctx, cap=config.demo_cap)
        print(f"target {target.id}: {target.text}")
        for log, tmpl in demos.demos:
            print(f"demo {log.id}: {log.text}  ->  {tmpl.render()}")
        print(f"covered: {' '.join(sorted(demos.covered)) or '(none)'}")
        print(f"uncovered: {' '.join(sorted(demos.uncovered)) or '(none)'}")
        return 0

    if args.what == "select":
        pool_ids = sorted(state.unlabeled) if state else [r.id for r in corpus.records]
        pool = [record_map[i] for i in pool_ids]
        conf = {i: 0.0 for i in pool_ids}
        if state and state.rounds and state.rounds[-1].confidence:
            conf.update({i: state.rounds[-1].confidence.get(i, 0.0) for i in pool_ids})
        reps = {
            rec.id: sim.representative_members(rec, pool, config.rep_radius) for rec in pool
        }
        budget = args.budget or min(10, len(pool))
        trace: list = []
        chosen = greedy_select(
            pool_ids, reps, conf, budget, config.confidence_weight, len(pool), trace=trace
        )
        print("pick,log_id,gain")
        for rank, (log_id, gain) in enumerate(trace):
            print(f"{rank},{log_id},{gain:.6f}")
        print(f"selected: {chosen}")
        return 0

    raise LogTemplarError(f"unknown inspect subcommand {args.what!r}")


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import AnnotationService

    corpus = ingest(args.corpus, args.format)
    config = build_run_config(args)
    ctx = build_context(config)
    gateway = build_gateway(args, corpus, ctx, config)
    service = AnnotationService(
        corpus,
        gateway,
        config,
        ctx=ctx,
        state_path=Path(args.output_dir) / "runstate.json",
        token=args.token,
        static_dir=args.static_dir,
    )
    service.start()
    uvicorn.run(service.app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="logtemplar")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an annotation run end to end")
    _add_run_flags(run_p)
    run_p.set_defaults(func=cmd_run)

    eval_p = sub.add_parser("eval", help="score a predictions file against ground truth")
    eval_p.add_argument("--corpus", required=True)
    eval_p.add_argument("--format", default="auto", choices=["auto", "logpai_csv", "jsonl"])
    eval_p.add_argument("--predictions", required=True)
    eval_p.add_argument("--output", default=None)
    eval_p.set_defaults(func=cmd_eval)

    inspect_p = sub.add_parser("inspect", help="debug distances, demos, and selection")
    inspect_p.add_argument("what", choices=["sed", "demos", "select"])
    inspect_p.add_argument("id_a", type=int, nargs="?", default=None)
    inspect_p.add_argument("id_b", type=int, nargs="?", default=None)
    inspect_p.add_argument("--corpus", required=True)
    inspect_p.add_argument("--format", default="auto", choices=["auto", "logpai_csv", "jsonl"])
    inspect_p.add_argument("--state", default=None, help="runstate.json for labeled context")
    inspect_p.add_argument("--budget", type=int, default=None)
    inspect_p.add_argument("--dry-run", action="store_true")
    inspect_p.set_defaults(func=cmd_inspect)

    serve_p = sub.add_parser("serve", help="run the interactive annotation service")
    _add_run_flags(serve_p)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8321)
    serve_p.add_argument("--token", default=None, help="shared bearer token")
    serve_p.add_argument("--static-dir", default=None, help="built UI assets to serve at /")
    serve_p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LogTemplarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
