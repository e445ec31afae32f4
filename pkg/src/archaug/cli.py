"""Command-line surface for the augmentation-and-prediction pipeline.

Five subcommands cover the reproduction workflow: ``gen-synthetic`` makes
labeled data, ``augment`` expands a dataset into homogeneous forms,
``train`` fits a predictor (the augmentation and encoding ablation axes
are two orthogonal flags), ``eval`` scores it, and ``search`` runs
predictor-guided evolution. Every run writes ``<output>.manifest.json``
recording the command, its resolved configuration, the seed, input file
hashes, output paths, and timings.

All randomness flows from the one ``--seed``: consumers derive their own
sub-seeds from it through :func:`archaug.seeding.derive_seed`, so results
do not depend on thread count or call order.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

from .arch_core import Space, space_nb101, space_synthetic
from .augment import augment_all, label_propagate
from .data_io import (
    build_training_set,
    from_architecture,
    gen_synthetic,
    load_jsonl,
    load_model,
    save_model,
    to_architecture,
    write_jsonl,
)
from .encode import feature_matrix
from .metrics import evaluate, write_rank_csv
from .nb201 import op_vocab_201
from .regress import fit_baseline, fit_forest, predict
from .search import SearchConfig, evolve, query_ground_truth
from .seeding import derive_seed

SPACE_FACTORIES = {
    "nb101": space_nb101,
    "nb201": op_vocab_201,
    "synthetic": space_synthetic,
}


def get_space(name: str) -> Space:
    try:
        return SPACE_FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown space {name!r}") from None


def _records_space(records, flag: str | None) -> Space:
    """Resolve the working space from records, cross-checked with a flag."""
    names = {rec.space for rec in records}
    if len(names) > 1:
        raise ValueError(f"records mix spaces {sorted(names)}")
    if not names:
        if flag is None:
            raise ValueError("empty input and no --space given")
        return get_space(flag)
    (name,) = names
    if flag is not None and flag != name:
        raise ValueError(f"--space {flag} but records say {name}")
    return get_space(name)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(command: str, args, inputs, outputs, timings) -> None:
    config = {
        key: value
        for key, value in sorted(vars(args).items())
        if key != "func" and not callable(value)
    }
    doc = {
        "command": command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    _write_json(doc, f"{outputs[0]}.manifest.json")


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        n = int(os.environ.get("ARCHAUG_THREADS", os.cpu_count() or 1))
    if n < 1:
        raise ValueError("--threads must be at least 1")
    return n


def cmd_augment(args) -> int:
    t0 = time.perf_counter()
    records = load_jsonl(args.input)
    space = _records_space(records, args.space)

    def rows():
        for i, rec in enumerate(records):
            if args.limit == 0:
                yield rec
                continue
            arch = to_architecture(rec, space)
            batch = augment_all(
                arch, limit=args.limit, seed=derive_seed(args.seed, "augment", i)
            )
            for j, (member, y) in enumerate(label_propagate(batch, rec.val_acc)):
                yield from_architecture(
                    member, space, f"{rec.id}#h{j:03d}", y, rec.test_acc
                )

    n_out = 0

    def counted():
        nonlocal n_out
        for row in rows():
            n_out += 1
            yield row

    write_jsonl(counted(), args.output)
    elapsed = time.perf_counter() - t0
    factor = n_out / len(records) if records else 0.0
    print(f"{len(records)} records -> {n_out} rows (x{factor:g}) in {elapsed:.2f}s")
    _manifest("augment", args, [args.input], [args.output], {"total_s": elapsed})
    return 0


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    records = load_jsonl(args.train)
    space = _records_space(records, None)
    data = build_training_set(
        records,
        space,
        scheme=args.scheme,
        augment=args.augment == "on",
        seed=args.seed,
        label=args.label,
        orientation=args.orientation,
        strict=False,
    )
    t_data = time.perf_counter() - t0
    if args.model == "rf":
        model = fit_forest(data, seed=args.seed, n_jobs=_threads(args))
    elif args.model == "linear":
        model = fit_baseline(data, "linear")
    else:
        model = fit_baseline(data, "knn", k=args.knn_k)
    t_fit = time.perf_counter() - t0 - t_data
    extras = {
        "space": space.name,
        "scheme": args.scheme,
        "orientation": args.orientation,
        "label": args.label,
        "augment": args.augment,
        "model": args.model,
        "seed": args.seed,
    }
    save_model(model, args.output, extras=extras)
    elapsed = time.perf_counter() - t0
    print(
        f"trained {args.model} on {data.n} rows x {data.dim} features "
        f"({data.n_original} original) in {elapsed:.2f}s"
    )
    _manifest(
        "train",
        args,
        [args.train],
        [args.output],
        {"data_s": t_data, "fit_s": t_fit, "total_s": elapsed},
    )
    return 0


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    model, extras = load_model(args.model, with_extras=True)
    records = load_jsonl(args.test)
    space = _records_space(records, extras.get("space"))
    label = args.label or extras.get("label", "val")
    archs = [to_architecture(rec, space, strict=False) for rec in records]
    X = feature_matrix(
        archs,
        space,
        scheme=extras.get("scheme", "onehot"),
        orientation=extras.get("orientation", "row"),
        checked=False,
    )
    y = [rec.val_acc if label == "val" else rec.test_acc for rec in records]
    if any(v is None for v in y):
        raise ValueError("some records lack the requested label")
    y_hat = predict(model, X)
    report = evaluate(y, y_hat, with_ranks=args.ranks is not None)
    doc = {k: v for k, v in report.to_dict().items() if k != "rank_pairs"}
    _write_json(doc, args.output)
    outputs = [args.output]
    if args.ranks is not None:
        write_rank_csv(report.rank_pairs, args.ranks)
        outputs.append(args.ranks)
    elapsed = time.perf_counter() - t0
    print(f"ktau {report.ktau:.4f} mse {report.mse:.6f} on {report.n} rows")
    _manifest("eval", args, [args.model, args.test], outputs, {"total_s": elapsed})
    return 0


def cmd_search(args) -> int:
    t0 = time.perf_counter()
    model, extras = load_model(args.model, with_extras=True)
    if extras.get("space") is not None and extras["space"] != args.space:
        raise ValueError(
            f"model was trained on space {extras['space']}, not {args.space}"
        )
    space = get_space(args.space)
    cfg = SearchConfig(
        population=args.population,
        cycles=args.cycles,
        tournament=args.tournament,
        edge_flip_prob=args.edge_flip_prob,
        type_change_prob=args.type_change_prob,
        top_k=args.top_k,
        seed=args.seed,
        time_budget=args.time_budget,
    )
    result = evolve(
        space,
        model,
        cfg,
        scheme=extras.get("scheme", "onehot"),
        orientation=extras.get("orientation", "row"),
    )
    selected = []
    for k, (arch, score) in enumerate(result.selected):
        shape = from_architecture(arch, space, f"sel-{k:02d}", 0.0)
        selected.append(
            {
                "adjacency": [list(row) for row in shape.adjacency],
                "ops": list(shape.ops),
                "score": score,
            }
        )
    doc = {
        "selected": selected,
        "history": list(result.history),
        "evaluations": result.evaluations,
    }
    inputs = [args.model]
    if args.ground_truth is not None:
        truth_records = load_jsonl(args.ground_truth)
        hits = query_ground_truth(
            result.selected, truth_records, space, label=args.label
        )
        doc["ground_truth"] = [dataclasses.asdict(h) for h in hits]
        inputs.append(args.ground_truth)
        if hits:
            top = max(hits, key=lambda h: h.percentile)
            print(f"best ground-truth percentile {top.percentile:.2f} (id {top.id})")
    _write_json(doc, args.output)
    elapsed = time.perf_counter() - t0
    best = result.selected[0][1] if result.selected else float("nan")
    print(
        f"best predicted {best:.4f} after {result.evaluations} evaluations "
        f"in {elapsed:.2f}s"
    )
    _manifest("search", args, inputs, [args.output], {"total_s": elapsed})
    return 0


def cmd_gen_synthetic(args) -> int:
    t0 = time.perf_counter()
    space = get_space(args.space)
    records = gen_synthetic(space, n=args.n, seed=args.seed, noise_sd=args.noise)
    write_jsonl(records, args.output)
    elapsed = time.perf_counter() - t0
    print(f"wrote {len(records)} records in {elapsed:.2f}s")
    _manifest("gen-synthetic", args, [], [args.output], {"total_s": elapsed})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archaug",
        description="Architecture-performance prediction with homogeneous augmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="expand a dataset into homogeneous forms")
    p.add_argument("input", help="JSONL dataset to expand")
    p.add_argument("--space", choices=sorted(SPACE_FACTORIES), default=None)
    p.add_argument("--limit", type=int, default=None,
                   help="forms added per record beyond the original; 0 copies through")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="fit a performance predictor")
    p.add_argument("train", help="JSONL training records")
    p.add_argument("--scheme", choices=("onehot", "hard"), default="onehot")
    p.add_argument("--augment", choices=("on", "off"), default="on")
    p.add_argument("--model", choices=("rf", "linear", "knn"), default="rf")
    p.add_argument("--label", choices=("val", "test"), default="val")
    p.add_argument("--orientation", choices=("row", "col"), default="row",
                   help="hard-scheme broadcast direction")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="tree-fitting workers; env ARCHAUG_THREADS, default all cores")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a predictor on labeled records")
    p.add_argument("model", help="model file from train")
    p.add_argument("test", help="JSONL test records")
    p.add_argument("--label", choices=("val", "test"), default=None,
                   help="default: the label the model was trained on")
    p.add_argument("--ranks", default=None, help="optional rank-pair CSV path")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("search", help="evolve architectures against a predictor")
    p.add_argument("model", help="model file from train")
    p.add_argument("--space", choices=sorted(SPACE_FACTORIES), required=True)
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--cycles", type=int, default=200)
    p.add_argument("--tournament", type=int, default=10)
    p.add_argument("--edge-flip-prob", type=float, default=0.5)
    p.add_argument("--type-change-prob", type=float, default=0.5)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--time-budget", type=float, default=None,
                   help="seconds of predictor wall time")
    p.add_argument("--ground-truth", default=None,
                   help="labeled JSONL to look up the selection in")
    p.add_argument("--label", choices=("val", "test"), default="val",
                   help="accuracy used for ground-truth percentile")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("gen-synthetic", help="write a synthetic labeled dataset")
    p.add_argument("--space", choices=sorted(SPACE_FACTORIES), default="synthetic")
    p.add_argument("-n", type=int, required=True, help="number of records")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # CLI boundary: fail with a message, not a trace
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
