"""Command line entry points: reconstruct, simulate, evaluate, bench."""

from __future__ import annotations

import argparse
import json
import sys

from .core import RandomStream, StudyDataset, load_dataset, store_dataset
from .engines import build_model, model_summary, simulate
from .evaluate import evaluate_dataset, store_evaluation
from .harness import load_config, run_benchmark
from .reconstruct import load_digitized_arm, reconstruct_study


def _labeled_paths(parser: argparse.ArgumentParser, spec: str, flag: str) -> list[tuple[str, str]]:
    pairs = []
    for part in spec.split(","):
        label, sep, path = part.partition("=")
        if not sep or not label or not path:
            parser.error(f"{flag} expects label=path[,label=path], got {spec!r}")
        pairs.append((label, path))
    if len(pairs) != 2:
        parser.error(f"{flag} expects exactly 2 arms, got {len(pairs)}")
    return pairs


def _cmd_reconstruct(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    coords = _labeled_paths(parser, args.coords, "--coords")
    risk = dict(_labeled_paths(parser, args.risk, "--risk"))
    if set(risk) != {label for label, _ in coords}:
        parser.error("--coords and --risk must name the same arm labels")
    totals: dict[str, int] = {}
    if args.meta:
        with open(args.meta) as fh:
            totals = {str(k): int(v) for k, v in json.load(fh).items() if v is not None}
    arms = tuple(
        load_digitized_arm(label, coords_path, risk[label], totals.get(label))
        for label, coords_path in coords
    )
    dataset, report = reconstruct_study(arms, study_id=args.study_id)  # type: ignore[arg-type]
    store_dataset(dataset, args.out)
    report.store(args.report)
    for label, arm_report in report.arms.items():
        state = "converged" if arm_report.converged else "NOT converged"
        print(
            f"{label}: {arm_report.n_observations} observations, "
            f"{arm_report.achieved_total_events} events, "
            f"max curve deviation {arm_report.max_survival_deviation:.4g}, {state}"
        )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    stream = RandomStream(args.seed, 0)
    arms = []
    summaries = []
    for arm in dataset.arms:
        model = build_model(args.engine, arm)
        n_out = len(arm) if args.n_per_arm == "source" else int(args.n_per_arm)
        arms.append(simulate(model, n_out, stream))
        summaries.append(model_summary(model))
    store_dataset(StudyDataset(tuple(arms)), args.out)
    if args.model_summary:
        with open(args.model_summary, "w") as fh:
            json.dump(summaries, fh, indent=2)
            fh.write("\n")
    print(f"wrote {sum(len(a) for a in arms)} simulated observations to {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    result = evaluate_dataset(load_dataset(args.input))
    store_evaluation(result, args.out)
    print(json.dumps(result.to_json(), indent=2))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config.output_dir = args.out
    if args.iterations is not None:
        config.iterations = args.iterations
    result = run_benchmark(config)
    print(
        f"{config.iterations} iterations x {len(config.studies)} studies x "
        f"{len(config.engines)} engines in {result.elapsed_seconds:.1f}s"
    )
    for skip in result.skipped:
        print(f"skipped {skip['study']}/{skip['engine']}: {skip['reason']}", file=sys.stderr)
    return 2 if result.skipped else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rec = sub.add_parser("reconstruct", help="rebuild patient data from digitized curves")
    p_rec.add_argument("--coords", required=True, help="label=coords.csv,label=coords.csv")
    p_rec.add_argument("--risk", required=True, help="label=risk.csv,label=risk.csv")
    p_rec.add_argument("--meta", help="JSON mapping arm label to total event count")
    p_rec.add_argument("--study-id", default=None)
    p_rec.add_argument("--out", required=True, help="output dataset CSV")
    p_rec.add_argument("--report", required=True, help="output quality-report JSON")

    p_sim = sub.add_parser("simulate", help="generate one synthetic dataset")
    p_sim.add_argument(
        "--engine", required=True, choices=["parametric", "kde", "case", "condboot"]
    )
    p_sim.add_argument("--input", required=True, help="source dataset CSV")
    p_sim.add_argument("--n-per-arm", default="source", help="integer or 'source'")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output dataset CSV")
    p_sim.add_argument("--model-summary", help="optional JSON dump of the fitted models")

    p_eval = sub.add_parser("evaluate", help="compute comparison statistics")
    p_eval.add_argument("--input", required=True, help="dataset CSV")
    p_eval.add_argument("--out", required=True, help="output JSON")

    p_bench = sub.add_parser("bench", help="run the simulation benchmark")
    p_bench.add_argument("--config", required=True, help="benchmark config JSON")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--iterations", type=int, default=None, help="override config")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "reconstruct":
        return _cmd_reconstruct(parser, args)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "evaluate":
        return _cmd_evaluate(args)
    if args.command == "bench":
        return _cmd_bench(args)
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
