"""Command-line interface: train, classify, report, synth.

stdout carries data (tables, JSONL, reports); stderr carries diagnostics.
Exit codes: 0 success, 1 configuration/usage errors, 2 data errors,
3 LLM transport failures in --strict-llm mode.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .classify import classify_csv
from .errors import ConfigError, HtreeError, LlmError
from .persona import LlmParams, render_description
from .pipeline import TrainConfig, load_model, save_model, train
from .resample import ResampleConfig
from .synth import generate_dataset, write_truth
from .tabular import infer_schema, ingest_csv, write_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_LLM = 3


class _CliExit(Exception):
    def __init__(self, code: int):
        super().__init__(f"exit {code}")
        self.code = code


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors via exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _CliExit(EXIT_CONFIG)


def _build_parser() -> _Parser:
    parser = _Parser(prog="htree", description="Cluster-then-predict tabular classifier.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_train = sub.add_parser("train", help="fit a model from a labeled CSV")
    p_train.add_argument("--input", required=True, help="training CSV")
    p_train.add_argument("--output", required=True, help="model artifact path (JSON)")
    p_train.add_argument("--config", help="TOML config file; flags override it")
    p_train.add_argument("--seed", type=int, help="seed for every stochastic stage")
    p_train.add_argument("--clusters", type=int, help="number of main clusters")
    p_train.add_argument("--min-subcluster-size", type=int, help="tree min leaf size gate")
    p_train.add_argument("--target-rate", type=float, help="resampling target success rate")
    p_train.add_argument(
        "--strategy", choices=("duplicate", "interpolate"), help="resampling strategy"
    )
    p_train.add_argument("--real-rate", type=float, help="real-world success rate")
    p_train.add_argument("--label-column", default=None, help="label column name (default success)")
    p_train.add_argument("--id-column", default=None, help="id column name (default: id if present)")
    llm_group = p_train.add_mutually_exclusive_group()
    llm_group.add_argument(
        "--mock-llm", action="store_true", help="use the offline deterministic mock (default)"
    )
    llm_group.add_argument("--llm-endpoint", help="live chat-completion endpoint URL")
    p_train.add_argument("--llm-model", help="model name for the live endpoint")
    p_train.add_argument(
        "--strict-llm",
        action="store_true",
        help="abort with exit 3 on LLM failure instead of degrading",
    )

    p_classify = sub.add_parser("classify", help="classify records with a trained model")
    p_classify.add_argument("--model", required=True, help="model artifact path")
    p_classify.add_argument("--input", required=True, help="CSV of records to classify")
    p_classify.add_argument(
        "--output", default="-", help="JSONL output path (default: stdout)"
    )

    p_report = sub.add_parser("report", help="render a model summary")
    p_report.add_argument("--model", required=True, help="model artifact path")
    p_report.add_argument("--format", choices=("md", "json"), default="md")

    p_synth = sub.add_parser("synth", help="generate a synthetic planted dataset")
    p_synth.add_argument("--personas", type=int, required=True, help="number of blobs")
    p_synth.add_argument("--rows", type=int, required=True, help="number of rows")
    p_synth.add_argument("--base-rate", type=float, default=0.019, help="overall success rate")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--output", required=True, help="CSV output path")

    return parser


def _merge_train_config(args) -> TrainConfig:
    """Defaults, then TOML file values, then flags; one seed for everything."""
    file_cfg: dict = {}
    if args.config:
        try:
            file_cfg = tomllib.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file '{args.config}': {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file '{args.config}' is not valid TOML: {exc}") from exc

    known_top = {
        "n_main_clusters",
        "min_subcluster_size",
        "real_world_success_rate",
        "top_k_features",
        "significance_threshold",
        "seed",
        "mock_llm",
        "strict_llm",
        "guidelines",
        "resample",
        "tree",
        "llm",
    }
    for key in file_cfg:
        if key not in known_top:
            raise ConfigError(f"unknown config key '{key}'")

    try:
        resample_cfg = ResampleConfig(
            target_success_rate=file_cfg.get("resample", {}).get("target_success_rate", 0.10),
            strategy=file_cfg.get("resample", {}).get("strategy", "duplicate"),
            neighbor_count=file_cfg.get("resample", {}).get("neighbor_count", 5),
        )
        tree_section = file_cfg.get("tree", {})
        llm_section = file_cfg.get("llm", {})
        llm_cfg = LlmParams(**llm_section) if llm_section else LlmParams()
        config = TrainConfig(
            n_main_clusters=file_cfg.get("n_main_clusters", 8),
            min_subcluster_size=file_cfg.get("min_subcluster_size", 5),
            real_world_success_rate=file_cfg.get("real_world_success_rate", 0.019),
            top_k_features=file_cfg.get("top_k_features", 5),
            significance_threshold=file_cfg.get("significance_threshold", 0.05),
            seed=file_cfg.get("seed", 0),
            mock_llm=file_cfg.get("mock_llm", True),
            strict_llm=file_cfg.get("strict_llm", False),
            guidelines=file_cfg.get("guidelines", ""),
            resample=resample_cfg,
            tree=replace(
                TrainConfig().tree,
                **{k: v for k, v in tree_section.items() if k in ("impurity", "max_depth", "min_gain")},
            ),
            llm=llm_cfg,
        )
    except TypeError as exc:
        raise ConfigError(f"invalid config file value: {exc}") from exc

    updates: dict = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.clusters is not None:
        updates["n_main_clusters"] = args.clusters
    if args.min_subcluster_size is not None:
        updates["min_subcluster_size"] = args.min_subcluster_size
    if args.real_rate is not None:
        updates["real_world_success_rate"] = args.real_rate
    if args.strict_llm:
        updates["strict_llm"] = True
    resample_updates: dict = {}
    if args.target_rate is not None:
        resample_updates["target_success_rate"] = args.target_rate
    if args.strategy is not None:
        resample_updates["strategy"] = args.strategy
    if resample_updates:
        updates["resample"] = replace(config.resample, **resample_updates)
    llm_updates: dict = {}
    if args.llm_endpoint:
        updates["mock_llm"] = False
        llm_updates["endpoint"] = args.llm_endpoint
    elif args.mock_llm:
        updates["mock_llm"] = True
    if args.llm_model:
        llm_updates["model_name"] = args.llm_model
    if llm_updates:
        updates["llm"] = replace(config.llm, **llm_updates)
    if updates:
        config = replace(config, **updates)
    return config


def _cmd_train(args) -> int:
    config = _merge_train_config(args)
    print(f"seed: {config.seed}", file=sys.stderr)
    label_column = args.label_column or "success"
    schema = infer_schema(args.input, label_name=label_column, id_name=args.id_column)
    data = ingest_csv(args.input, schema)
    model = train(data, config)
    save_model(model, args.output)

    print(f"{'cluster':>7}  {'members':>7}  {'successes':>9}  {'raw_rate':>8}  {'norm_rate':>9}  top_features")
    for label in range(model.clusters.n_main_clusters):
        profile = model.profiles[label]
        tops = ",".join(name for name, _ in profile.significant_features[:3])
        print(
            f"{label:>7}  {profile.member_count:>7}  {profile.success_count:>9}  "
            f"{profile.raw_success_rate:>8.4f}  {profile.normalized_success_rate:>9.4f}  {tops}"
        )
    absent = sorted(l for l, d in model.descriptions.items() if d is None)
    if absent:
        print(
            "personas unavailable for clusters: " + ", ".join(str(l) for l in absent),
            file=sys.stderr,
        )
    print(f"model written to {args.output}", file=sys.stderr)
    return EXIT_OK


def _cmd_classify(args) -> int:
    model = load_model(args.model)
    if args.output == "-":
        histogram = classify_csv(model, args.input, sys.stdout)
    else:
        histogram = classify_csv(model, args.input, args.output)
    total = sum(histogram.values())
    print(f"classified {total} records", file=sys.stderr)
    for label in sorted(histogram):
        print(f"cluster {label}: {histogram[label]} records", file=sys.stderr)
    return EXIT_OK


def _report_dict(model) -> dict:
    clusters = []
    for label in range(model.clusters.n_main_clusters):
        profile = model.profiles[label]
        tree = model.trees.get(label)
        description = model.descriptions.get(label)
        clusters.append(
            {
                "label": label,
                "member_count": profile.member_count,
                "success_count": profile.success_count,
                "raw_success_rate": profile.raw_success_rate,
                "normalized_success_rate": profile.normalized_success_rate,
                "significant_features": [[n, z] for n, z in profile.significant_features],
                "feature_importances": (
                    {
                        name: float(v)
                        for name, v in zip(model.schema.feature_names, tree.feature_importances)
                    }
                    if tree is not None
                    else None
                ),
                "subclusters": [s.to_dict() for s in profile.subclusters],
                "description": description.to_dict() if description is not None else None,
            }
        )
    return {
        "format_version": model.format_version,
        "n_main_clusters": model.clusters.n_main_clusters,
        "clusters": clusters,
    }


def _rate_pct(rate: float) -> str:
    return f"{rate * 100:.1f}%"


def _cmd_report(args) -> int:
    model = load_model(args.model)
    if args.format == "json":
        print(json.dumps(_report_dict(model), indent=2, sort_keys=True))
        return EXIT_OK

    lines = ["# Cluster report", ""]
    ranked = sorted(
        range(model.clusters.n_main_clusters),
        key=lambda l: -model.profiles[l].normalized_success_rate,
    )
    lines.append("| cluster | members | raw rate | normalized rate |")
    lines.append("| --- | --- | --- | --- |")
    for label in ranked:
        p = model.profiles[label]
        lines.append(
            f"| {label} | {p.member_count} | {_rate_pct(p.raw_success_rate)} "
            f"| {_rate_pct(p.normalized_success_rate)} |"
        )
    lines.append("")

    for label in range(model.clusters.n_main_clusters):
        profile = model.profiles[label]
        tree = model.trees.get(label)
        description = model.descriptions.get(label)
        lines.append(f"## Cluster {label}")
        lines.append("")
        lines.append(
            f"- members: {profile.member_count} ({profile.success_count} successes)"
        )
        lines.append(f"- raw success rate: {_rate_pct(profile.raw_success_rate)}")
        lines.append(
            f"- normalized success rate: {_rate_pct(profile.normalized_success_rate)}"
        )
        tops = ", ".join(f"{n} ({z:+.2f})" for n, z in profile.significant_features)
        lines.append(f"- top features: {tops}")
        lines.append("")
        if tree is not None:
            lines.append("### Feature importances")
            lines.append("")
            ranked_feats = sorted(
                zip(model.schema.feature_names, tree.feature_importances),
                key=lambda t: -t[1],
            )
            for name, value in ranked_feats:
                if value > 0:
                    lines.append(f"- {name}: {value:.3f}")
            lines.append("")
        if profile.subclusters:
            lines.append("### Subcluster rules")
            lines.append("")
            for sub in profile.subclusters:
                preds = " AND ".join(
                    f"{name} {op} {threshold:.4g}" for name, op, threshold in sub.rule.predicates
                )
                preds = preds if preds else "(no conditions)"
                lines.append(
                    f"- IF {preds} THEN success rate {_rate_pct(sub.raw_success_rate)} "
                    f"(n={sub.member_count}, normalized {_rate_pct(sub.normalized_success_rate)})"
                )
            lines.append("")
        lines.append("### Persona")
        lines.append("")
        if description is not None:
            lines.append(render_description(description))
        else:
            lines.append("(description unavailable)")
        lines.append("")
    print("\n".join(lines))
    return EXIT_OK


def _cmd_synth(args) -> int:
    print(f"seed: {args.seed}", file=sys.stderr)
    data, truth = generate_dataset(
        n_personas=args.personas,
        n_rows=args.rows,
        base_rate=args.base_rate,
        seed=args.seed,
    )
    write_csv(data, args.output)
    out = Path(args.output)
    truth_path = out.with_name(out.stem + ".truth.json")
    write_truth(truth, str(truth_path))
    print(
        f"wrote {data.n_rows} rows ({data.success_count} successes) to {args.output}; "
        f"truth sidecar at {truth_path}",
        file=sys.stderr,
    )
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
        handler = {
            "train": _cmd_train,
            "classify": _cmd_classify,
            "report": _cmd_report,
            "synth": _cmd_synth,
        }[args.command]
        return handler(args)
    except _CliExit as exc:
        return exc.code
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return EXIT_OK if code in (0, None) else int(code)
    except LlmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LLM
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HtreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
