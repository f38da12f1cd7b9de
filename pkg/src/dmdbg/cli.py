"""Command-line interface.

Usage::

    dmdbg extract  --input FRAMES_DIR --output OUT_DIR [options]
    dmdbg evaluate --gt GT.png --input BACKGROUND.png [--output report.json]
    dmdbg bench    --dataset SBI_ROOT --output OUT_DIR [options]
    dmdbg synth    --kind moving-square --output OUT_DIR [--frames 40 ...]

Exit codes: 0 success, 2 usage, 3 I/O, 4 numerical, 5 data shape. On any
error the last line on stderr is a JSON object ``{"error": ..., "exit_code": ...}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__, dmd
from .bench import BenchConfig, run_bench
from .errors import DmdBgError, UsageError
from .imaging import load_sequence, read_image, write_png
from .metrics import cqm
from .pipeline import (
    COLOR_TRANSFER_CHOICES,
    NORMALIZATION_CHOICES,
    ExtractConfig,
    extract_background,
)
from .synth import KINDS, generate, write_synthetic

logger = logging.getLogger("dmdbg")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _report_error(UsageError(f"{self.prog}: {message}"))
        sys.exit(UsageError.exit_code)


def _report_error(exc: DmdBgError) -> int:
    print(f"error: {exc}", file=sys.stderr)
    print(json.dumps({"error": exc.code, "exit_code": exc.exit_code}), file=sys.stderr)
    return exc.exit_code


def _add_dmd_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rank-tol", type=float, default=dmd.DEFAULT_RANK_TOL,
                   help="relative singular value cutoff (default: %(default)g)")
    p.add_argument("--delta-t", type=float, default=dmd.DEFAULT_DELTA_T,
                   help="time step between frames (default: %(default)g)")
    p.add_argument("--color-transfer", choices=COLOR_TRANSFER_CHOICES, default="both")
    p.add_argument("--normalization", choices=NORMALIZATION_CHOICES, default="per-channel")
    p.add_argument("--mode-realization", choices=("magnitude", "real"), default="magnitude")
    p.add_argument("--color-source", choices=("mode", "median"), default="mode",
                   help="temporal statistic used as the colour-transfer reference")
    p.add_argument("--svd-method", choices=dmd.SVD_METHODS, default="qr")


def _extract_config(args) -> ExtractConfig:
    return ExtractConfig(
        rank_tol=args.rank_tol,
        delta_t=args.delta_t,
        color_transfer=args.color_transfer,
        normalization=args.normalization,
        mode_realization=args.mode_realization,
        color_source=args.color_source,
        svd_method=args.svd_method,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dmdbg", description="Colour scene background extraction with DMD.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="extract the DMD (and DMD_CT) background of a frame directory")
    p.add_argument("--input", required=True, type=Path, help="directory of frames")
    p.add_argument("--output", default=Path("."), type=Path, help="output directory")
    p.add_argument("--pattern", default="*", help="filename glob for frames")
    _add_dmd_options(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="CQM of a background against a ground truth")
    p.add_argument("--gt", required=True, type=Path)
    p.add_argument("--input", required=True, type=Path, help="background image")
    p.add_argument("--output", type=Path, help="also write the report as JSON here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="score DMD, DMD_CT and Median on an SBI-layout dataset")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--sequences", nargs="*", default=(), help="restrict to these sequence names")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="format of the table printed to stdout")
    _add_dmd_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic sequence with known background")
    p.add_argument("--kind", choices=KINDS, default="moving-square")
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, type=Path)
    p.set_defaults(func=cmd_synth)
    return parser


def cmd_extract(args) -> int:
    config = _extract_config(args)
    seq = load_sequence(args.input, args.pattern)
    ext = extract_background(seq, config)
    outputs = {"dmd": str(write_png(args.output / "dmd.png", ext.dmd.image))}
    if ext.dmd_ct is not None:
        outputs["dmd_ct"] = str(write_png(args.output / "dmd_ct.png", ext.dmd_ct.image))
    summary = {
        "n_frames": ext.n_frames,
        "rank": ext.rank,
        "mode_index": ext.mode_index,
        "abs_mu": ext.abs_mu,
        "sigma": [ext.sigma.real, ext.sigma.imag],
        "outputs": outputs,
    }
    (args.output / "extract.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"selected mode {ext.mode_index} |mu|={ext.abs_mu:.6e} (rank {ext.rank}, N={ext.n_frames})")
    for label, path in outputs.items():
        print(f"{label}: {path}")
    return 0


def cmd_evaluate(args) -> int:
    report = cqm(read_image(args.gt), read_image(args.input))
    record = report.to_dict()
    if args.format == "json":
        print(json.dumps(record))
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(record), lineterminator="\n")
        writer.writeheader()
        writer.writerow(record)
        print(buf.getvalue(), end="")
    if args.output is not None:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(json.dumps(record, indent=2) + "\n")
    return 0


def cmd_bench(args) -> int:
    config = BenchConfig(
        dataset_root=args.dataset,
        output_dir=args.output,
        sequences=tuple(args.sequences),
        extract=_extract_config(args),
    )
    report = run_bench(config)
    print(report.to_csv() if args.format == "csv" else report.to_json(), end="")
    for d in report.diagnostics:
        logger.info("%s: N=%d mode=%d |mu|=%.3e", d["sequence"], d["n_frames"], d["mode_index"], d["abs_mu"])
    return 0


def cmd_synth(args) -> int:
    synthetic = generate(args.kind, args.frames, args.width, args.height, args.seed)
    write_synthetic(synthetic, args.output)
    print(json.dumps(synthetic.metadata()))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DmdBgError as exc:
        return _report_error(exc)


if __name__ == "__main__":
    sys.exit(main())
