"""CLI: extract full-network activations from an image folder.

Exit codes: 0 success, 1 usage error, 2 unreadable input or unknown
architecture, 3 other extraction failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExtractorError
from .extract import ExtractionJob, collect_images, run_job
from .model import ARCHITECTURES


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"vd-extract: usage error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="vd-extract",
        description="Dump spatially pooled CNN activations as FNERAW1.",
    )
    parser.add_argument("--images-dir", required=True,
                        help="directory of images")
    parser.add_argument("--by-synset-subdirs", action="store_true",
                        help="treat each subdirectory as one synset")
    parser.add_argument("--arch", default="vgg16",
                        help=f"architecture name, one of {sorted(ARCHITECTURES)}")
    parser.add_argument("--weights", default="pretrained",
                        choices=("pretrained", "random"),
                        help="pretrained weights, or seeded random init for "
                             "hermetic runs")
    parser.add_argument("--seed", type=int, default=0,
                        help="weight seed when --weights random")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--out-raw", required=True)
    parser.add_argument("--out-manifest", required=True)
    parser.add_argument("--out-layout", required=True)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        groups = collect_images(Path(args.images_dir), args.by_synset_subdirs)
        job = ExtractionJob(
            images_by_synset=groups,
            architecture=args.arch,
            weights=args.weights,
            seed=args.seed,
            batch_size=args.batch,
            out_raw=Path(args.out_raw),
            out_manifest=Path(args.out_manifest),
            out_layout=Path(args.out_layout),
        )
        result = run_job(job)
    except ExtractorError as exc:
        print(f"vd-extract: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"vd-extract: i/o error: {exc}", file=sys.stderr)
        return 2
    print(
        f"vd-extract: {result.n_samples} rows x {result.n_features} features "
        f"({len(result.segments)} layers, {len(result.skipped)} skipped) "
        f"-> {args.out_raw}",
        file=sys.stderr,
    )
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
