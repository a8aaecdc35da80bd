"""Command-line interface.

Subcommands: train, predict, diagnose, experiment, synth.  All commands are
non-interactive, never mutate their inputs, log to stderr, and write
artifacts to --out-dir (or a single artifact to stdout with --stdout).
Artifacts embed the schema version, tool version, seed, and a digest of the
effective configuration; runtime-only knobs (workers, output paths) stay
out of the digest so identical runs produce byte-identical files.

Exit codes: 0 success, 2 input error, 3 numerical error.
"""

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    augment_with_outputs,
    exclude_outliers,
    load_csv,
    load_schema,
    make_split,
    save_csv,
)
from .diagnostics import diagnose_dataset
from .emulator import (
    extrapolation_flags,
    load_model,
    model_to_dict,
    predict,
    train_emulator,
)
from .errors import InputError, NumericalError, PpemuError
from .experiments import (
    experiment_hyper_sweep,
    experiment_learning_curve,
    experiment_random_splits,
)
from .hyper import HyperparameterSet, get_preset
from .selection import SelectionConfig, run_selection
from .synth import synth_generate
from .util import canonical_json, config_hash


def _log(msg):
    print(msg, file=sys.stderr)


def _slug(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", str(name))


def _write_artifact(doc, path, args):
    if getattr(args, "stdout", False):
        sys.stdout.write(canonical_json(doc))
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(doc))
    _log(f"wrote {path}")


def _stamp(doc, digest, seed):
    doc["tool_version"] = __version__
    doc["config_digest"] = digest
    doc.setdefault("seed", seed)
    return doc


def _merge_config(args, parser):
    """Fill unset flags from the --config JSON file, flags winning."""
    if not getattr(args, "config", None):
        return args
    try:
        overrides = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from exc
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"config key {key!r} is not a recognized option")
        if parser.get_default(attr) == getattr(args, attr):
            setattr(args, attr, value)
    return args


def _load_dataset(args):
    if not args.data or not args.schema:
        raise InputError("--data and --schema are required")
    dataset = load_csv(args.data, load_schema(args.schema))
    if getattr(args, "exclude_outliers", None):
        rule = args.exclude_outliers
        if rule.startswith("z:"):
            dataset, report = exclude_outliers(dataset, z_threshold=float(rule[2:]))
        else:
            dataset, report = exclude_outliers(dataset, ids=rule.split(","))
        _log(f"excluded {len({r['row_id'] for r in report})} outlier rows")
    if getattr(args, "augment_with", None):
        providers = [load_model(p) for p in args.augment_with.split(",")]
        names = [m.target_name for m in providers]
        dataset = augment_with_outputs(dataset, names, providers)
        _log(f"augmented with emulated columns for: {', '.join(names)}")
    return dataset


def _read_id_file(path):
    ids = [line.strip() for line in Path(path).read_text().splitlines()]
    return [r for r in ids if r]


def _resolve_split(args, dataset):
    """--split random:<train>/<val> | ids:<train file>,<val file> | tags:a=n,b=m"""
    spec = args.split
    if spec is None:
        return None
    if spec.startswith("random:"):
        sizes = spec[len("random:") :].split("/")
        if len(sizes) != 2:
            raise InputError("random split syntax: random:<train>/<val>")
        return make_split(
            dataset, train_size=int(sizes[0]), val_size=int(sizes[1]), seed=args.seed
        )
    if spec.startswith("ids:"):
        files = spec[len("ids:") :].split(",")
        if len(files) != 2:
            raise InputError("ids split syntax: ids:<train file>,<val file>")
        return make_split(
            dataset,
            train_ids=_read_id_file(files[0]),
            validation_ids=_read_id_file(files[1]),
        )
    if spec.startswith("tags:"):
        quotas = {}
        for part in spec[len("tags:") :].split(","):
            tag, _, count = part.partition("=")
            if not count:
                raise InputError("tags split syntax: tags:<tag>=<count>,...")
            quotas[tag] = int(count)
        return make_split(dataset, tag_quotas=quotas, seed=args.seed)
    raise InputError(f"unknown split rule {spec!r}")


def _selection_config(args):
    if args.hyper_json:
        hyper = HyperparameterSet.from_dict(json.loads(Path(args.hyper_json).read_text()))
    else:
        hyper = get_preset(args.preset)
    subset = _read_id_file(args.selection_subset) if args.selection_subset else None
    return SelectionConfig(
        hyper=hyper,
        m1=args.m1,
        m2=args.m2,
        m3=args.m3,
        forced=args.forced,
        prune_epsilon=args.prune_epsilon,
        selection_subset=subset,
    )


def _digest_source(args, exclude=("workers", "out_dir", "stdout", "config")):
    src = {k: v for k, v in vars(args).items() if k not in exclude and k != "func"}
    return config_hash(src)


def cmd_train(args):
    if args.stdout:
        raise InputError("train writes two artifacts per target; use --out-dir")
    dataset = _load_dataset(args)
    cfg = _selection_config(args)
    split = _resolve_split(args, dataset)
    train = dataset.take_rows(split.train_ids) if split else dataset
    digest = _digest_source(args)
    targets = args.target.split(",") if args.target else list(dataset.target_names)
    out_dir = Path(args.out_dir)
    for target in targets:
        model, report = train_emulator(
            train, target, cfg, seed=args.seed, workers=args.workers,
            config_digest=digest,
        )
        _log(
            f"target {target}: {len(model.sequence)} terms retained of "
            f"{len(report.candidate_sequence)} candidates"
        )
        _write_artifact(
            model_to_dict(model), out_dir / f"model_{_slug(target)}.json", args
        )
        doc = _stamp(report.to_dict(), digest, args.seed)
        if split is not None:
            doc["split"] = split.to_dict()
        _write_artifact(doc, out_dir / f"selection_{_slug(target)}.json", args)
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    rows = []
    with open(args.queries, newline="") as fh:
        reader = csv.reader(fh)
        table = list(reader)
    if not table:
        raise InputError(f"{args.queries}: empty file, header required")
    header = table[0]
    col = {name: i for i, name in enumerate(header)}
    missing = [p for p in model.param_names if p not in col]
    if missing:
        raise InputError(f"query file lacks parameter columns: {', '.join(missing)}")
    id_col = col.get(args.id_column)

    out_path = Path(args.out) if args.out else None
    sink = sys.stdout if out_path is None else open(out_path, "w", newline="")
    try:
        writer = csv.writer(sink)
        writer.writerow(["query_id", "prediction", "extrapolation"])
        if len(table) > 1:
            q = np.array(
                [[float(row[col[p]]) for p in model.param_names] for row in table[1:]]
            )
            values = predict(model, q)
            flags = extrapolation_flags(model, q)
            for i, row in enumerate(table[1:]):
                qid = row[id_col] if id_col is not None else str(i)
                writer.writerow([qid, repr(float(values[i])), int(flags[i])])
    finally:
        if out_path is not None:
            sink.close()
            _log(f"wrote {out_path}")
    return 0


def cmd_diagnose(args):
    model = load_model(args.model)
    dataset = _load_dataset(args)
    report = diagnose_dataset(model, dataset)
    digest = _digest_source(args)
    doc = _stamp(report.to_dict(), digest, args.seed)
    out_dir = Path(args.out_dir)
    name = _slug(model.target_name)
    _write_artifact(doc, out_dir / f"diagnostics_{name}.json", args)
    if not args.stdout:
        csv_path = out_dir / f"diagnostics_{name}.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["position", "kind", "params", "explained_variability"])
            for c in report.contributions:
                writer.writerow(
                    [c["position"], c["kind"], "+".join(c["params"]), repr(c["value"])]
                )
        _log(f"wrote {csv_path}")
    return 0


def cmd_experiment(args):
    dataset = _load_dataset(args)
    cfg = _selection_config(args)
    digest = _digest_source(args)
    out_dir = Path(args.out_dir)
    name = _slug(args.target or "all")

    if args.kind == "random-splits":
        if args.train_size is None or args.val_size is None:
            raise InputError("random-splits needs --train-size and --val-size")
        default_split = _resolve_split(args, dataset)
        doc = experiment_random_splits(
            dataset,
            args.target.split(",") if args.target else list(dataset.target_names),
            train_size=args.train_size,
            val_size=args.val_size,
            repeats=args.repeats,
            seed=args.seed,
            cfg=cfg,
            default_split=default_split,
            workers=args.workers,
        )
    elif args.kind == "hyper-sweep":
        if not args.target:
            raise InputError("hyper-sweep needs --target")
        split = _resolve_split(args, dataset)
        if split is None:
            raise InputError("hyper-sweep needs --split")
        if args.model:
            sequence = load_model(args.model).sequence
        else:
            sequence, _ = run_selection(
                dataset.take_rows(split.train_ids), args.target, cfg,
                seed=args.seed, workers=args.workers,
            )
        doc = experiment_hyper_sweep(
            dataset, args.target, split, sequence, workers=args.workers
        )
    elif args.kind == "learning-curve":
        if not args.target:
            raise InputError("learning-curve needs --target")
        if args.eval_ids:
            eval_ids = _read_id_file(args.eval_ids)
        elif args.eval_size:
            rng = np.random.default_rng(args.seed)
            pick = rng.permutation(dataset.n_rows)[: args.eval_size]
            eval_ids = [dataset.row_ids[i] for i in sorted(pick)]
        else:
            raise InputError("learning-curve needs --eval-ids or --eval-size")
        sizes = [int(s) for s in args.sizes.split(",")]
        doc = experiment_learning_curve(
            dataset,
            args.target,
            eval_ids,
            sizes=sizes,
            repeats=args.repeats,
            seed=args.seed,
            cfg=cfg,
            fixed_identity=args.fixed_identity,
            workers=args.workers,
        )
    else:
        raise InputError(f"unknown experiment kind {args.kind!r}")

    _stamp(doc, digest, args.seed)
    _write_artifact(doc, out_dir / f"experiment_{args.kind}_{name}.json", args)
    return 0


def cmd_synth(args):
    dataset, manifest = synth_generate(args.scenario, args.n, args.d, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{args.scenario}.csv"
    schema = save_csv(dataset, csv_path)
    (out_dir / f"{args.scenario}.schema.json").write_text(canonical_json(schema))
    (out_dir / f"{args.scenario}.manifest.json").write_text(canonical_json(manifest))
    _log(f"wrote {csv_path} (+schema, +manifest)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ppemu",
        description="Additive GP emulator for sparse perturbed-parameter ensembles",
    )
    parser.add_argument("--version", action="version", version=f"ppemu {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="JSON file of option defaults")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default="out")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--stdout", action="store_true",
                       help="write the (single) JSON artifact to stdout")
        if data:
            p.add_argument("--data", help="dataset CSV")
            p.add_argument("--schema", help="column-role schema JSON")
            p.add_argument("--exclude-outliers",
                           help="comma-separated row ids, or z:<threshold>")
            p.add_argument("--augment-with",
                           help="comma-separated provider model files whose "
                                "predictions join the parameters")

    def selection_opts(p):
        p.add_argument("--preset", default="default",
                       help="hyperparameter preset (default, set1..set5)")
        p.add_argument("--hyper-json", help="explicit hyperparameter set JSON")
        p.add_argument("--m1", type=int, default=None)
        p.add_argument("--m2", type=int, default=None)
        p.add_argument("--m3", type=int, default=None)
        p.add_argument("--forced", action="store_true",
                       help="retain exactly m1+m2+m3 terms, skip pruning")
        p.add_argument("--prune-epsilon", type=float, default=0.0)
        p.add_argument("--selection-subset",
                       help="file of row ids that drive selection")

    p = sub.add_parser("train", help="select terms and train emulators")
    common(p)
    selection_opts(p)
    p.add_argument("--target", help="target name(s), comma separated (default all)")
    p.add_argument("--split", help="random:<n>/<m> | ids:<train>,<val> | tags:a=n,...")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a trained model to query rows")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True, help="CSV with parameter columns")
    p.add_argument("--id-column", default="member_id")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("diagnose", help="explained variability on evaluation data")
    common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("experiment", help="run a protocol over the pipeline")
    common(p)
    selection_opts(p)
    p.add_argument("--kind", required=True,
                   choices=["random-splits", "hyper-sweep", "learning-curve"])
    p.add_argument("--target")
    p.add_argument("--split", help="designated default split (see train)")
    p.add_argument("--model", help="hyper-sweep: take the frozen sequence from this model")
    p.add_argument("--train-size", type=int)
    p.add_argument("--val-size", type=int)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--sizes", default="100,200,300,400")
    p.add_argument("--eval-ids", help="file of fixed evaluation row ids")
    p.add_argument("--eval-size", type=int)
    p.add_argument("--fixed-identity", action="store_true",
                   help="pin learning-curve top-k terms to one ranking")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="generate a synthetic ensemble")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, parser)
        if getattr(args, "repeats", None) is None and hasattr(args, "repeats"):
            args.repeats = {"learning-curve": 5}.get(getattr(args, "kind", ""), 10)
        return args.func(args)
    except NumericalError as exc:
        json.dump({"error": {"type": "numerical", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    except (InputError, PpemuError) as exc:
        json.dump({"error": {"type": "input", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
