"""Command-line pipeline: one subcommand per stage, staged files between.

Exit codes: 0 success, 1 usage error, 2 malformed/unreadable input,
3 computation error.  Data goes only to files or stdout; diagnostics to
stderr.  Output files are written to a temporary sibling and atomically
renamed, so a failing stage never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Callable, Sequence

import numpy as np

from . import analysis, cluster, distance, fne, ingest, lexical, representative
from .errors import InputFormatError, UsageError, VdError

PROG = "vd"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _atomic_write(path: str, writer: Callable, binary: bool = True) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp.vd.")
    try:
        if binary:
            sink = os.fdopen(fd, "wb")
        else:
            sink = os.fdopen(fd, "w", encoding="utf-8", newline="\n")
        with sink:
            writer(sink)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _emit_text(text: str, output: str | None) -> None:
    if output:
        _atomic_write(output, lambda sink: sink.write(text), binary=False)
    else:
        sys.stdout.write(text)


def _log(message: str) -> None:
    print(f"{PROG}: {message}", file=sys.stderr)


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        if value < 1:
            raise UsageError("--threads must be >= 1")
        return value
    env = os.environ.get("VD_THREADS")
    if env:
        try:
            parsed = int(env)
        except ValueError:
            raise UsageError(f"VD_THREADS={env!r} is not an integer") from None
        if parsed < 1:
            raise UsageError("VD_THREADS must be >= 1")
        return parsed
    return os.cpu_count() or 1


def _read_ids_file(path: str) -> list[str]:
    ids: list[str] = []
    with open(path, encoding="utf-8") as source:
        for line in source:
            line = line.strip()
            if line and not line.startswith("#"):
                ids.append(line)
    return ids


# --- subcommands ---------------------------------------------------------------

def _cmd_discretize(args) -> int:
    with open(args.input, "rb") as source:
        raw = ingest.read_raw_matrix(source)
    thresholds = fne.Thresholds(ft_minus=args.ft_minus, ft_plus=args.ft_plus)
    if args.stats_in:
        with open(args.stats_in, encoding="utf-8") as source:
            stats = fne.read_stats_tsv(source)
        standardized = fne.apply_standardization(raw, stats)
    else:
        standardized, stats = fne.standardize(raw)
    ternary = fne.discretize(standardized, thresholds)
    _atomic_write(args.output, lambda sink: fne.write_ternary_matrix(ternary, sink))
    if args.stats_out:
        _atomic_write(
            args.stats_out, lambda sink: fne.write_stats_tsv(stats, sink),
            binary=False,
        )
    _log(
        f"discretized {ternary.n_samples}x{ternary.n_features} with thresholds "
        f"({thresholds.ft_minus}, {thresholds.ft_plus}) -> {args.output}"
    )
    return 0


def _cmd_represent(args) -> int:
    with open(args.ternary, "rb") as source:
        ternary = fne.read_ternary_matrix(source)
    with open(args.manifest, encoding="utf-8") as source:
        manifest = ingest.read_manifest(source)
    if manifest.n_samples != ternary.n_samples:
        raise InputFormatError(
            f"manifest covers {manifest.n_samples} samples but the ternary "
            f"matrix has {ternary.n_samples}"
        )
    groups = ingest.group_by_synset(manifest)
    reps = representative.build_all_representatives(ternary, groups)
    _atomic_write(
        args.output, lambda sink: representative.write_representatives(reps, sink)
    )
    _log(f"built {len(reps)} representatives -> {args.output}")
    return 0


def _cmd_distmat(args) -> int:
    with open(args.reps, "rb") as source:
        reps = representative.read_representatives(source)
    threads = _resolve_threads(args.threads)
    matrix = distance.distance_matrix(reps, threads=threads)
    _atomic_write(args.output, lambda sink: distance.write_distance_matrix(matrix, sink))
    _log(
        f"visual distance over {matrix.size} synsets "
        f"({matrix.condensed.size} pairs, {threads} threads) -> {args.output}"
    )
    return 0


def _cmd_lexmat(args) -> int:
    with open(args.taxonomy, encoding="utf-8") as source:
        taxonomy = lexical.parse_taxonomy(source)
    ids = _read_ids_file(args.ids)
    ic = None
    if args.ic:
        with open(args.ic, encoding="utf-8") as source:
            ic = lexical.parse_information_content(source)
    matrix = lexical.lexical_distance_matrix(taxonomy, ids, args.measure, ic=ic)
    _atomic_write(args.output, lambda sink: distance.write_distance_matrix(matrix, sink))
    _log(f"{args.measure} distance over {matrix.size} synsets -> {args.output}")
    return 0


def _cmd_compare(args) -> int:
    with open(args.a, "rb") as source:
        matrix_a = distance.read_distance_matrix(source)
    with open(args.b, "rb") as source:
        matrix_b = distance.read_distance_matrix(source)
    report = analysis.compare_matrices(matrix_a, matrix_b)
    _emit_text(report.to_json(), args.output)
    _log(
        f"compared {matrix_a.metric_name} vs {matrix_b.metric_name} over "
        f"{report.shared_ids} shared synsets"
    )
    return 0


def _cmd_cluster(args) -> int:
    with open(args.input, "rb") as source:
        matrix = distance.read_distance_matrix(source)
    dendrogram = cluster.agglomerative_cluster(matrix)
    payload = {
        "linkage": "average",
        "ids": list(dendrogram.ids),
        "merges": [[m.left, m.right, m.height, m.size] for m in dendrogram.merges],
    }
    if args.k is not None:
        labels = dendrogram.cut(args.k)
        payload["k"] = args.k
        payload["labels"] = [int(v) for v in labels]
        if args.compare:
            with open(args.compare, "rb") as source:
                other = distance.read_distance_matrix(source)
            if other.synset_ids != matrix.synset_ids:
                raise InputFormatError(
                    "cluster comparison requires matrices over identical synsets"
                )
            other_labels = cluster.agglomerative_cluster(other).cut(args.k)
            payload["ari"] = cluster.adjusted_rand_index(labels, other_labels)
    elif args.compare:
        raise UsageError("--compare requires --k")
    _emit_text(json.dumps(payload, indent=2) + "\n", args.output)
    if args.newick:
        _atomic_write(
            args.newick, lambda sink: sink.write(dendrogram.to_newick()),
            binary=False,
        )
    _log(f"clustered {matrix.size} synsets ({matrix.metric_name})")
    return 0


def _cmd_project(args) -> int:
    if args.method == "mds":
        with open(args.input, "rb") as source:
            matrix = distance.read_distance_matrix(source)
        projection = analysis.classical_mds(matrix, dims=args.dims)
    else:
        with open(args.input, "rb") as source:
            reps = representative.read_representatives(source)
        projection = analysis.pca_projection(reps, dims=args.dims)
    _atomic_write(
        args.output,
        lambda sink: analysis.write_projection_csv(projection, sink),
        binary=False,
    )
    _log(f"{args.method} projection of {len(projection.ids)} synsets -> {args.output}")
    return 0


def _cmd_stats(args) -> int:
    with open(args.ternary, "rb") as source:
        ternary = fne.read_ternary_matrix(source)
    layout = None
    if args.layout:
        with open(args.layout, encoding="utf-8") as source:
            layout = ingest.read_layer_layout(source)
    report = fne.feature_type_proportions(ternary, layout).to_dict()
    report["ft_minus"] = ternary.thresholds.ft_minus
    report["ft_plus"] = ternary.thresholds.ft_plus
    if args.bootstrap:
        if not args.manifest:
            raise UsageError("--bootstrap requires --manifest")
        with open(args.manifest, encoding="utf-8") as source:
            manifest = ingest.read_manifest(source)
        if manifest.n_samples != ternary.n_samples:
            raise InputFormatError(
                f"manifest covers {manifest.n_samples} samples but the "
                f"ternary matrix has {ternary.n_samples}"
            )
        groups = ingest.group_by_synset(manifest)
        report["bootstrap_flip_rate"] = representative.bootstrap_stability(
            ternary, groups, n_resamples=args.bootstrap, seed=args.seed
        )
    _emit_text(json.dumps(report, indent=2) + "\n", args.output)
    return 0


def _cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    n, m, k = args.samples, args.features, args.synsets
    if k > n:
        raise UsageError(f"cannot spread {k} synsets over {n} samples")
    synset_ids = [f"n{90000000 + idx:08d}" for idx in range(k)]

    # leaves spread along an internal chain, so depths (and the lexical
    # similarities) differ across synset pairs
    n_internal = max(2, k // 2)
    internal = [f"h{idx:06d}" for idx in range(n_internal)]
    edges: list[tuple[str, str]] = [
        (internal[idx], internal[idx - 1]) for idx in range(1, n_internal)
    ]
    for idx, synset_id in enumerate(synset_ids):
        edges.append((synset_id, internal[idx % n_internal]))

    assignment = np.sort(rng.integers(0, k, size=n - k))
    owners = synset_ids + [synset_ids[v] for v in assignment]  # every synset non-empty
    owners.sort()

    base = rng.normal(0.0, 1.0, size=(n, m))
    signatures = {s: rng.choice(m, size=max(1, m // 10), replace=False)
                  for s in synset_ids}
    for row, owner in enumerate(owners):
        base[row, signatures[owner]] += 2.0
    matrix = base.astype(np.float32)

    _atomic_write(args.out_raw, lambda sink: ingest.write_raw_matrix(matrix, sink))
    manifest_rows = "".join(
        f"{row}\timg{row:06d}\t{owner}\n" for row, owner in enumerate(owners)
    )
    _atomic_write(args.out_manifest, lambda sink: sink.write(manifest_rows),
                  binary=False)
    taxonomy_rows = "".join(f"{child}\t{parent}\n" for child, parent in edges)
    _atomic_write(args.out_taxonomy, lambda sink: sink.write(taxonomy_rows),
                  binary=False)

    if args.out_ic:
        taxonomy = lexical.parse_taxonomy(taxonomy_rows.splitlines(keepends=True))
        lines = []
        for node in sorted(taxonomy.nodes):
            node_depth = taxonomy.depth(node)
            value = (node_depth - 1) * 0.7 + float(rng.uniform(0.0, 0.3))
            lines.append(f"{node}\t{value:.6f}\n")
        _atomic_write(args.out_ic, lambda sink: sink.write("".join(lines)),
                      binary=False)

    if args.out_layout:
        split = max(1, (2 * m) // 3)
        if split >= m:
            rows = f"conv1\tconv\t0\t{m}\n"
        else:
            rows = f"conv1\tconv\t0\t{split}\nfc1\tfc\t{split}\t{m}\n"
        _atomic_write(args.out_layout, lambda sink: sink.write(rows), binary=False)

    _log(f"synthesized {n}x{m} over {k} synsets (seed {args.seed})")
    return 0


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog=PROG,
        description="Visual distance between WordNet synsets from CNN activations.",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("discretize", parents=[], prog=f"{PROG} discretize",
                       help="standardize a raw matrix and map it to {-1,0,1}")
    p.add_argument("--input", required=True, help="FNERAW1 activation matrix")
    p.add_argument("--output", required=True, help="FNETER1 ternary matrix")
    p.add_argument("--ft-minus", type=float, default=fne.DEFAULT_FT_MINUS)
    p.add_argument("--ft-plus", type=float, default=fne.DEFAULT_FT_PLUS)
    p.add_argument("--stats-out", help="write per-feature mean/stddev TSV")
    p.add_argument("--stats-in", help="reuse standardization stats instead of fitting")
    p.set_defaults(func=_cmd_discretize)

    p = sub.add_parser("represent", prog=f"{PROG} represent",
                       help="collapse ternary rows into per-synset representatives")
    p.add_argument("--ternary", required=True, help="FNETER1 ternary matrix")
    p.add_argument("--manifest", required=True, help="sample manifest TSV")
    p.add_argument("--output", required=True, help="FNEREP1 representatives")
    p.set_defaults(func=_cmd_represent)

    p = sub.add_parser("distmat", prog=f"{PROG} distmat",
                       help="all-pairs visual distance matrix")
    p.add_argument("--reps", required=True, help="FNEREP1 representatives")
    p.add_argument("--output", required=True, help="VDMAT1 distance matrix")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: VD_THREADS or all cores)")
    p.set_defaults(func=_cmd_distmat)

    p = sub.add_parser("lexmat", prog=f"{PROG} lexmat",
                       help="lexical distance matrix from a hypernym taxonomy")
    p.add_argument("--taxonomy", required=True, help="child<TAB>parent TSV")
    p.add_argument("--ids", required=True, help="file with one synset id per line")
    p.add_argument("--measure", required=True, choices=lexical.MEASURES)
    p.add_argument("--ic", help="synset_id<TAB>ic TSV (required for lin)")
    p.add_argument("--output", required=True, help="VDMAT1 distance matrix")
    p.set_defaults(func=_cmd_lexmat)

    p = sub.add_parser("compare", prog=f"{PROG} compare",
                       help="Pearson/Spearman correlation of two matrices")
    p.add_argument("--a", required=True, help="first VDMAT1 matrix")
    p.add_argument("--b", required=True, help="second VDMAT1 matrix")
    p.add_argument("--output", help="write JSON report here instead of stdout")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("cluster", prog=f"{PROG} cluster",
                       help="average-linkage clustering of a distance matrix")
    p.add_argument("--input", required=True, help="VDMAT1 distance matrix")
    p.add_argument("--k", type=int, help="cut the tree into k clusters")
    p.add_argument("--compare", help="second VDMAT1 matrix for ARI at --k")
    p.add_argument("--newick", help="also write Newick text here")
    p.add_argument("--output", help="write dendrogram JSON here instead of stdout")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("project", prog=f"{PROG} project",
                       help="2-D MDS or PCA coordinates")
    p.add_argument("--input", required=True,
                   help="VDMAT1 matrix (mds) or FNEREP1 representatives (pca)")
    p.add_argument("--method", required=True, choices=("mds", "pca"))
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--output", required=True, help="coordinates CSV")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("stats", prog=f"{PROG} stats",
                       help="ternary class proportions and stability diagnostics")
    p.add_argument("--ternary", required=True, help="FNETER1 ternary matrix")
    p.add_argument("--layout", help="layer layout TSV for per-layer proportions")
    p.add_argument("--manifest", help="manifest TSV (needed for --bootstrap)")
    p.add_argument("--bootstrap", type=int, default=0,
                   help="resample count for representative stability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("synth", prog=f"{PROG} synth",
                       help="seeded synthetic fixtures (matrix, manifest, taxonomy)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--features", type=int, default=512)
    p.add_argument("--synsets", type=int, default=10)
    p.add_argument("--out-raw", required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-taxonomy", required=True)
    p.add_argument("--out-ic")
    p.add_argument("--out-layout")
    p.set_defaults(func=_cmd_synth)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "subcommand", None):
            parser.print_help(sys.stderr)
            return 1
        return args.func(args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        return exc.exit_code
    except InputFormatError as exc:
        _log(f"input error: {type(exc).__name__}: {exc}")
        return exc.exit_code
    except OSError as exc:
        _log(f"i/o error: {exc}")
        return 2
    except VdError as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return exc.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
