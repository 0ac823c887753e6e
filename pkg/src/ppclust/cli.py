"""Command-line entry point: ``ppclust {gen,dist,ap,em,eval}``.

Pipelines::

    ppclust gen --preset separated --seed 7 --out d.jsonl --truth-out truth.csv
    ppclust dist --metric ospa --p 2 --c 20 --in d.jsonl --out D.csv
    ppclust ap --in D.csv --preference median --out labels.csv
    ppclust em --in d.jsonl --k 3 --n-iter 30 --out labels.csv --model-out model.json
    ppclust eval labels.csv truth.csv
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .apcluster import ApConfig, run_ap, similarity_from_dissimilarity
from .core import read_dataset, read_labels, write_dataset, write_labels
from .datagen import PRESETS, generate_dataset, load_gen_spec, preset
from .emcluster import EmConfig, fit_em, map_assign
from .evaluate import rand_index
from .exceptions import ParseError, PointPatternError
from .rfsmodel import model_to_dict
from .setdist import DistanceSpec, pairwise_dissimilarity

log = logging.getLogger("ppclust")


def _write_sidecar(path, payload):
    with open(f"{path}.meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _configure_logging(quiet):
    # a handler bound to the current stderr; basicConfig would be a no-op on repeat calls
    log.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING if quiet else logging.INFO)
    log.propagate = False


def _log_config(config):
    log.info("resolved config: %s", json.dumps(config, sort_keys=True))


# -- dissimilarity matrix CSV ---------------------------------------------

def write_matrix(path, ids, values, spec: DistanceSpec):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {spec.describe()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *ids])
        for pid, row in zip(ids, values):
            writer.writerow([pid, *(repr(float(v)) for v in row)])


def read_matrix(path):
    """Return ``(ids, values, spec)`` from a matrix CSV written by :func:`write_matrix`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header.startswith("# "):
            raise ParseError("matrix file must start with a '# kind=...' spec line", 1)
        try:
            spec = DistanceSpec.parse(header[2:].strip())
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad distance spec line: {exc}", 1) from None
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["id"]:
        raise ParseError("second line must be the 'id,...' column header", 2)
    ids = rows[0][1:]
    values = np.empty((len(ids), len(ids)))
    if len(rows) - 1 != len(ids):
        raise ParseError(f"expected {len(ids)} matrix rows, got {len(rows) - 1}")
    for r, row in enumerate(rows[1:]):
        lineno = r + 3
        if len(row) != len(ids) + 1 or row[0] != ids[r]:
            raise ParseError("row length or row id does not match the header", lineno)
        try:
            values[r] = [float(v) for v in row[1:]]
        except ValueError:
            raise ParseError("non-numeric matrix entry", lineno) from None
    return ids, values, spec


# -- subcommands ----------------------------------------------------------

def cmd_gen(args):
    if args.spec:
        spec = load_gen_spec(args.spec, rng_seed=args.seed)
        if args.patterns_per_component is not None:
            spec = type(spec)(spec.components, args.patterns_per_component, spec.rng_seed)
    else:
        spec = preset(args.preset, args.seed if args.seed is not None else 0,
                      args.patterns_per_component or 100)
    config = {"command": "gen", "preset": args.preset, "spec_file": str(args.spec) if args.spec else None,
              "generator": spec.to_dict()}
    _log_config(config)
    dataset = generate_dataset(spec)
    write_dataset(dataset, args.out)
    _write_sidecar(args.out, config)
    if args.truth_out:
        write_labels(args.truth_out, dataset.ids, dataset.labels)
        _write_sidecar(args.truth_out, config)
    print(f"wrote {len(dataset)} patterns to {args.out}")


def cmd_dist(args):
    dataset = read_dataset(args.input)
    spec = DistanceSpec(args.metric, args.p, args.c)
    _log_config({"command": "dist", "input": str(args.input), "spec": spec.describe(),
                 "jobs": args.jobs})
    D = pairwise_dissimilarity(dataset, spec, n_jobs=args.jobs)
    write_matrix(args.out, dataset.ids, D.values, spec)
    print(f"wrote {len(dataset)}x{len(dataset)} {spec.kind} matrix to {args.out}")


def _preference(text):
    if text == "median":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("preference must be a number or 'median'") from None


def cmd_ap(args):
    ids, values, spec = read_matrix(args.input)
    config = ApConfig(args.preference, args.damping, args.max_iter, args.convergence_window)
    resolved = {"command": "ap", "input": str(args.input), "distance": spec.describe(),
                "preference": args.preference, "damping": args.damping,
                "max_iterations": args.max_iter, "convergence_window": args.convergence_window}
    _log_config(resolved)
    S = similarity_from_dissimilarity(values, args.preference)
    result = run_ap(S, config)
    write_labels(args.out, ids, result.hard_labels.tolist())
    _write_sidecar(args.out, {"config": resolved, "diagnostics": result.diagnostics,
                              "preference_value": float(S[0, 0]),
                              "exemplars": [ids[k] for k in result.exemplars]})
    print(f"{result.n_clusters} clusters after {result.diagnostics['iterations']} iterations")


def cmd_em(args):
    dataset = read_dataset(args.input)
    config = EmConfig(n_components=args.k, n_iterations=args.n_iter,
                      cardinality_family=args.cardinality, init=args.init,
                      min_weight=args.min_weight, rng_seed=args.seed,
                      unit_volume=args.unit_volume, tol=args.tol,
                      scatter_weighting=args.scatter_weighting)
    resolved = {"command": "em", "input": str(args.input), **config.__dict__}
    _log_config(resolved)
    model, trace = fit_em(dataset, config)
    result = map_assign(dataset, model)
    write_labels(args.out, dataset.ids, result.hard_labels.tolist())
    _write_sidecar(args.out, {"config": resolved, "iterations": trace.n_iterations,
                              "converged": trace.converged,
                              "log_likelihood": result.diagnostics["log_likelihood"]})
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({**model_to_dict(model), "config": resolved}, fh, indent=2,
                      allow_nan=False)
            fh.write("\n")
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "log_likelihood"])
            writer.writerow([0, repr(trace.initial_log_likelihood)])
            for i, ll in enumerate(trace.log_likelihood, start=1):
                writer.writerow([i, repr(ll)])
        _write_sidecar(args.trace_out, {"config": resolved})
    print(f"fitted {args.k} components in {trace.n_iterations} iterations")


def _load_truth(path):
    if str(path).endswith(".jsonl"):
        dataset = read_dataset(path)
        if dataset.labels is None:
            raise ParseError(f"{path} carries no labels")
        return dict(zip(dataset.ids, dataset.labels))
    return read_labels(path)


def cmd_eval(args):
    predicted = read_labels(args.predicted)
    truth = _load_truth(args.truth)
    if set(predicted) != set(truth):
        missing = sorted(set(predicted) ^ set(truth))[:5]
        raise ParseError(f"label files cover different ids (e.g. {missing})")
    ids = sorted(truth)
    score = rand_index([predicted[i] for i in ids], [truth[i] for i in ids])
    print(repr(score))


def build_parser():
    parser = argparse.ArgumentParser(prog="ppclust", description="Clustering for point-pattern data.")
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="do not log the resolved config to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a labelled dataset from a Poisson-RFS mixture")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--spec", type=Path, help="JSON generator spec")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--patterns-per-component", type=int, default=None)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--truth-out", type=Path, help="also write ground truth as id,label CSV")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("dist", help="all-pairs set-distance matrix")
    d.add_argument("--metric", choices=["hausdorff", "wasserstein", "ospa"], required=True)
    d.add_argument("--p", type=float, default=2.0)
    d.add_argument("--c", type=float, default=None, help="OSPA cut-off (required for ospa)")
    d.add_argument("--in", dest="input", type=Path, required=True)
    d.add_argument("--out", type=Path, required=True)
    d.add_argument("--jobs", type=int, default=None)
    d.set_defaults(func=cmd_dist)

    a = sub.add_parser("ap", help="affinity propagation on a dissimilarity matrix")
    a.add_argument("--in", dest="input", type=Path, required=True)
    a.add_argument("--preference", type=_preference, default="median")
    a.add_argument("--damping", type=float, default=0.9)
    a.add_argument("--max-iter", type=int, default=1000)
    a.add_argument("--convergence-window", type=int, default=50)
    a.add_argument("--out", type=Path, required=True)
    a.set_defaults(func=cmd_ap)

    e = sub.add_parser("em", help="EM clustering with an iid-cluster RFS mixture")
    e.add_argument("--in", dest="input", type=Path, required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--n-iter", type=int, default=100)
    e.add_argument("--cardinality", choices=["poisson", "categorical"], default="poisson")
    e.add_argument("--init", choices=["kmeans++", "random"], default="kmeans++")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--min-weight", type=float, default=0.0)
    e.add_argument("--unit-volume", type=float, default=1.0)
    e.add_argument("--tol", type=float, default=1e-8)
    e.add_argument("--scatter-weighting", choices=["point", "cardinality"], default="point")
    e.add_argument("--out", type=Path, required=True, help="labels CSV")
    e.add_argument("--model-out", type=Path)
    e.add_argument("--trace-out", type=Path)
    e.set_defaults(func=cmd_em)

    v = sub.add_parser("eval", help="Rand index between two labelings")
    v.add_argument("predicted", type=Path)
    v.add_argument("truth", type=Path, help="labels CSV or labelled dataset (.jsonl)")
    v.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.quiet)
    if args.command == "dist" and args.metric == "ospa" and args.c is None:
        parser.error("--c is required for --metric ospa")
    try:
        args.func(args)
    except (PointPatternError, ValueError, OSError) as exc:
        print(f"ppclust {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
