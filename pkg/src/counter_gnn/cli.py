"""Command-line entry point wiring the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data error.  Seeds are mandatory
where randomness is involved; there are no wall-clock defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from .detector import DetectorConfig, detect_counterattacks, label_frames, summary_stats
from .errors import DataError
from .graphs import build_dataset, filter_gender, load_dataset, save_dataset, split_balanced
from .importance import permutation_importance
from .metrics import evaluate
from .model import load_params, save_params
from .pipeline import (
    ExperimentConfig,
    gen_synthetic,
    read_labeled_frames,
    run_experiment,
    write_labeled_frames,
)
from .synthetic import SynthConfig
from .tracking import IngestStats, PitchSpec, load_events, load_tracking, synchronize
from .training import TrainConfig, train
from .whatif import sweep_rotations


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"config file not found: {path}")
    if p.suffix == ".toml":
        return tomllib.loads(p.read_text())
    return json.loads(p.read_text())


def _dataclass_from(cls, data: dict, **overrides):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise DataError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    merged = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    return cls(**merged)


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(args) -> int:
    config = _dataclass_from(SynthConfig, _load_config_file(args.config))
    written = gen_synthetic(config, args.seed, args.out, n_matches=args.matches)
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_detect(args) -> int:
    pitch = PitchSpec()
    stats = IngestStats()
    frames = load_tracking(args.tracking, pitch, stats)
    events = load_events(args.events, stats)
    match = synchronize(frames, events, args.gender, pitch, match_id=args.match_id)
    config = _dataclass_from(DetectorConfig, _load_config_file(args.config))
    sequences = detect_counterattacks(match, config)
    labeled = label_frames(match, sequences)
    write_labeled_frames(labeled, args.out)
    shots = [e for e in match.events if e.kind == "shot"]
    summary = summary_stats(sequences, shots)
    _write_json(
        {
            "match_id": match.match_id,
            "n_sequences": summary.n_sequences,
            "n_success": summary.n_success,
            "success_rate": summary.success_rate,
            "shots_total": summary.shots_total,
            "shots_in_sequences": summary.shots_in_sequences,
            "shot_share": summary.shot_share,
            "labeled_frames": len(labeled),
            "dropped_events": match.dropped_events,
        },
        args.summary,
    )
    return 0


def cmd_build_graphs(args) -> int:
    labeled = read_labeled_frames(args.frames)
    dataset = build_dataset(
        labeled, gender_aware=args.gender_aware, match_id=args.match_id, source=str(args.frames)
    )
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset.samples)} graphs to {args.out}")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    if args.gender != "combined":
        dataset = filter_gender(dataset, args.gender)
    if not dataset.samples:
        raise DataError(f"no samples for gender {args.gender!r}")
    config = _dataclass_from(TrainConfig, _load_config_file(args.config), seed=args.seed)
    train_set, test_set = split_balanced(dataset, seed=config.seed)
    if args.test_out:
        save_dataset(test_set, args.test_out)
    report = train(train_set, config)
    save_params(report.params, args.out)
    print(
        f"trained {config.epochs} epochs on {len(train_set.samples)} graphs; "
        f"final loss {report.epoch_losses[-1]:.4f}; saved {args.out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    params = load_params(args.model)
    dataset = load_dataset(args.dataset)
    report = evaluate(params, dataset, n_bins=args.bins)
    _write_json(report.to_dict(), args.out)
    return 0


def cmd_importance(args) -> int:
    params = load_params(args.model)
    dataset = load_dataset(args.dataset)
    report = permutation_importance(params, dataset, n_repeats=args.repeats, seed=args.seed)
    _write_json(report.to_dict(), args.out)
    return 0


def cmd_whatif(args) -> int:
    from .service import FramePayload  # pydantic payload shared with the service

    params = load_params(args.model)
    payload = FramePayload.model_validate_json(Path(args.frame).read_text())
    result = sweep_rotations(
        params, payload.to_frame(), args.player, step=args.step, gender=payload.gender
    )
    _write_json(
        {
            "player_id": args.player,
            "step": args.step,
            "base_probability": result.base_probability,
            "best_probability": result.new_probability,
            "best_degrees": result.best_degrees,
            "delta_percentage_points": result.delta_percentage_points,
            "sweep": [{"degrees": d, "probability": p} for d, p in result.sweep],
        },
        args.out,
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    raw = _load_config_file(args.config)
    config = ServiceConfig(
        models=raw.get("models", {}),
        dataset_path=raw.get("dataset_path"),
        importance_paths=raw.get("importance_paths", {}),
        max_request_bytes=raw.get("max_request_bytes", 2_000_000),
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_experiment(args) -> int:
    config = _dataclass_from(ExperimentConfig, _load_config_file(args.config), seed=args.seed)
    report = run_experiment(config, model_dir=args.model_dir)
    _write_json(report, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="counter-gnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic tracking/event files")
    p.add_argument("--config", help="SynthConfig TOML/JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--matches", type=int, default=1)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("detect", help="detect counterattacks and label frames")
    p.add_argument("--tracking", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--config", help="DetectorConfig TOML/JSON")
    p.add_argument("--out", required=True, help="labeled-frame JSONL output")
    p.add_argument("--summary", help="sequence summary JSON output (stdout if omitted)")
    p.add_argument("--gender", choices=["women", "men"], default="women")
    p.add_argument("--match-id", default="match")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("build-graphs", help="convert labeled frames to a graph dataset")
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gender-aware", action="store_true")
    p.add_argument("--match-id", default="match")
    p.set_defaults(func=cmd_build_graphs)

    p = sub.add_parser("train", help="train a model on a graph dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--gender", choices=["women", "men", "combined"], default="combined")
    p.add_argument("--config", help="TrainConfig TOML/JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="weight file (.cgnn)")
    p.add_argument("--test-out", help="write the held-out test split here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics and calibration for a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="permutation feature importance")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--repeats", type=int, default=15)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("whatif", help="rotation sweep for one player in one frame")
    p.add_argument("--model", required=True)
    p.add_argument("--frame", required=True, help="JSON file with a frame payload")
    p.add_argument("--player", required=True)
    p.add_argument("--step", type=float, default=15.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--config", required=True, help="ServiceConfig TOML/JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("experiment", help="train women/men/combined and report")
    p.add_argument("--config", help="ExperimentConfig TOML/JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--model-dir")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except DataError as exc:
        print(f"counter-gnn: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
