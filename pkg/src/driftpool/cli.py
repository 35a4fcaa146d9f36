"""Command-line front end: generate / run / bench / compare.

Every subcommand that produces files takes an ``--outdir`` and writes all
outputs there, including ``config.json`` with the fully resolved settings.
A JSON config file (``--config``) supplies defaults; explicit flags win.
Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from .base import ConfigError, DriftpoolError
from .evaluation import (
    build_framework,
    build_plan,
    build_stream,
    framework_label,
    read_results_csv,
    run_plan,
    run_prequential,
    stream_label,
    summarize,
    write_results_csv,
    write_summary_csv,
)
from .generators import legal_concept_values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_stream_flags(parser):
    parser.add_argument("--family", help="generator family")
    parser.add_argument("--concepts", help="comma-separated concept values")
    parser.add_argument("--period", type=int, help="instances per concept")
    parser.add_argument("--drifts", type=int, default=0, help="number of drifts")
    parser.add_argument("--attribute-noise", type=float, default=0.0)
    parser.add_argument("--class-noise", type=float, default=0.0)
    parser.add_argument("--majority-fraction", type=float, default=None)
    parser.add_argument("--seed", type=int, default=1)


def _add_framework_flags(parser):
    parser.add_argument("--framework", choices=("ecpf", "cpf", "baseline"),
                        default="ecpf")
    parser.add_argument("--learner", default="hoeffding_nb",
                        choices=("hoeffding_nb", "naive_bayes", "perceptron"))
    parser.add_argument("--detector", default="hddm_a",
                        choices=("hddm_a", "rddm", "oracle"))
    parser.add_argument("--m", type=float, default=0.95,
                        help="similarity threshold for conceptual equivalence")
    parser.add_argument("--f", type=int, default=15,
                        help="fade points granted on creation and reuse")
    parser.add_argument("--b-min", type=int, default=60,
                        help="minimum buffer before CPF decides reuse")
    parser.add_argument("--memory-cap", type=int, default=None)
    parser.add_argument("--lead", type=int, default=60,
                        help="oracle detector lead (instances)")
    parser.add_argument("--trace", action="store_true",
                        help="emit the per-drift event log")


def _build_parser(config=None):
    parser = _Parser(prog="driftpool",
                     description="Drift-aware stream classification harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[], help="dump a stream to CSV")
    _add_stream_flags(gen)
    gen.add_argument("--config", help="JSON config file (flags win)")
    gen.add_argument("--outdir", required=True)

    run = sub.add_parser("run", help="run one framework over one stream")
    _add_stream_flags(run)
    _add_framework_flags(run)
    run.add_argument("--data", help="ARFF/CSV file instead of a generator")
    run.add_argument("--format", choices=("arff", "csv"), default="arff")
    run.add_argument("--class-column", type=int, default=None)
    run.add_argument("--config", help="JSON config file (flags win)")
    run.add_argument("--outdir", required=True)

    bench = sub.add_parser("bench", help="run an experiment plan")
    bench.add_argument("--plan", required=True, help="plan JSON file")
    bench.add_argument("--parallelism", type=int, default=1)
    bench.add_argument("--config", help="JSON config file (flags win)")
    bench.add_argument("--outdir", required=True)

    comp = sub.add_parser("compare", help="summarize results CSVs")
    comp.add_argument("results", nargs="+", help="results CSV files")

    if config:
        for action in sub.choices.values():
            known = {a.dest for a in action._actions}
            unknown = set(config) - known
            if not unknown:
                action.set_defaults(**config)
        # unknown keys are validated against the chosen subcommand later
    return parser


def _load_config(argv):
    """Pull --config out of argv early so its values become flag defaults."""
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
        else:
            continue
        try:
            with open(path, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
        return config
    return None


def _validate_config_keys(config, args_namespace):
    if not config:
        return
    known = set(vars(args_namespace))
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")


def _parse_concepts(text, family):
    if text is None:
        raise ConfigError("--concepts is required for generator streams")
    if isinstance(text, (list, tuple)):
        raw = list(text)
    else:
        raw = [tok.strip() for tok in str(text).split(",") if tok.strip()]
    values = []
    for tok in raw:
        try:
            value = float(tok)
        except ValueError:
            raise ConfigError(
                f"invalid concept value {tok!r}; legal values for {family}: "
                f"{legal_concept_values(family)}"
            ) from None
        values.append(int(value) if value == int(value) else value)
    return values


def _stream_config_from_args(args):
    if getattr(args, "data", None):
        return {
            "kind": "file",
            "path": args.data,
            "format": args.format,
            "class_column": args.class_column,
        }
    if not args.family:
        raise ConfigError("either --family or --data is required")
    config = {
        "kind": "generator",
        "family": args.family,
        "concepts": _parse_concepts(args.concepts, args.family),
        "period": args.period,
        "drifts": args.drifts,
    }
    if args.period is None:
        raise ConfigError("--period is required for generator streams")
    if args.attribute_noise:
        config["attribute_noise"] = args.attribute_noise
    if args.class_noise:
        config["class_noise"] = args.class_noise
    if args.majority_fraction is not None:
        config["majority_fraction"] = args.majority_fraction
    return config


def _framework_config_from_args(args):
    config = {
        "framework": args.framework,
        "learner": args.learner,
        "detector": args.detector,
        "m": args.m,
        "f": args.f,
        "b_min": args.b_min,
        "lead": args.lead,
        "trace": args.trace,
    }
    if args.memory_cap is not None:
        config["memory_cap"] = args.memory_cap
    return config


def _echo_config(outdir, args):
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("command",)
    }
    with open(outdir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _ensure_outdir(args):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def write_stream_csv(source, fh):
    """Dump a stream as CSV with a trailing 0/1 ``drift`` marker column."""
    schema = source.schema
    names = [a.name for a in schema.attributes] + ["class", "drift"]
    fh.write(",".join(names) + "\n")
    rows = 0
    for instance, marker in source:
        cells = []
        for spec, value in zip(schema.attributes, instance.values):
            if spec.is_nominal:
                cells.append(spec.values[int(value)])
            else:
                cells.append(repr(float(value)))
        cells.append(schema.class_values[instance.label])
        cells.append("1" if marker else "0")
        fh.write(",".join(cells) + "\n")
        rows += 1
    return rows


def _cmd_generate(args):
    outdir = _ensure_outdir(args)
    stream_config = _stream_config_from_args(args)
    if stream_config.get("kind") == "file":
        raise ConfigError("generate only works with generator streams")
    source = build_stream(stream_config, args.seed)
    out_path = outdir / "stream.csv"
    with open(out_path, "w", encoding="utf-8") as fh:
        rows = write_stream_csv(source, fh)
    _echo_config(outdir, args)
    print(f"wrote {rows} rows to {out_path}")
    return 0


def _trace_csv(events, fh):
    writer = csv.writer(fh)
    writer.writerow([
        "drift_index", "buffer_size", "saved_id", "saved_from_reused",
        "reused_id", "collection_size", "error_vectors", "representations",
        "faded_deleted", "evicted", "fade_table",
    ])
    for e in events:
        vectors = {str(k): "".join(str(bit) for bit in v)
                   for k, v in e.error_vectors.items()}
        writer.writerow([
            e.drift_index, e.buffer_size,
            "" if e.saved_id is None else e.saved_id,
            int(e.saved_from_reused),
            "" if e.reused_id is None else e.reused_id,
            e.collection_size,
            json.dumps(vectors, sort_keys=True),
            json.dumps(e.representations, sort_keys=True),
            json.dumps(e.faded_deleted),
            json.dumps(e.evicted),
            json.dumps({str(k): v for k, v in e.fade_table.items()},
                       sort_keys=True),
        ])


def _cmd_run(args):
    outdir = _ensure_outdir(args)
    stream_config = _stream_config_from_args(args)
    framework_config = _framework_config_from_args(args)
    source = build_stream(stream_config, args.seed)
    framework = build_framework(framework_config, source.schema, stream_config)
    result = run_prequential(
        framework, source,
        framework_name=framework_label(framework_config),
        stream_name=stream_label(stream_config),
        seed=args.seed,
    )
    with open(outdir / "result.csv", "w", encoding="utf-8") as fh:
        write_results_csv([result], fh)
    if args.trace:
        with open(outdir / "trace.csv", "w", encoding="utf-8", newline="") as fh:
            _trace_csv(framework.trace_events, fh)
    _echo_config(outdir, args)
    print(
        f"{result.framework} on {result.stream}: accuracy={result.accuracy:.4f} "
        f"kappa={result.kappa:.4f} drifts={result.drifts_detected} "
        f"runtime_ms={result.runtime_ms:.1f}"
    )
    return 0


def _cmd_bench(args):
    outdir = _ensure_outdir(args)
    try:
        with open(args.plan, "r", encoding="utf-8") as fh:
            plan_config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load plan {args.plan}: {exc}") from exc
    plan = build_plan(plan_config)
    results = run_plan(plan, parallelism=args.parallelism)
    with open(outdir / "results.csv", "w", encoding="utf-8") as fh:
        write_results_csv(results, fh)
    summaries = summarize(results)
    with open(outdir / "summary.csv", "w", encoding="utf-8") as fh:
        write_summary_csv(summaries, fh)
    _echo_config(outdir, args)
    failed = sum(1 for r in results if r.status != "ok")
    print(f"ran {len(results)} cells ({failed} failed); outputs in {outdir}")
    return 0


def _cmd_compare(args):
    results = []
    for path in args.results:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                results.extend(read_results_csv(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
    summaries = summarize(results)
    print(f"{'framework':<12} {'stream':<16} {'mean':>8} {'stdev':>8} "
          f"{'n':>4} {'rank':>6}")
    for s in summaries:
        print(f"{s.framework:<12} {s.stream:<16} {s.mean:>8.4f} "
              f"{s.stdev:>8.4f} {s.n:>4d} {s.mean_rank:>6.2f}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "bench": _cmd_bench,
    "compare": _cmd_compare,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = _load_config(argv)
        parser = _build_parser(config)
        args = parser.parse_args(argv)
        _validate_config_keys(config, args)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DriftpoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
