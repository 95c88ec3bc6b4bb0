"""Command-line entry point: ``pedscan detect | bench | train-fixture``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classify import load_model, save_model
from .core import load_pgm
from .parallel import ExecConfig
from .pipeline import VARIANTS, PipelineConfig, benchmark, detect, train_from_images

log = logging.getLogger("pedscan")


class CliError(Exception):
    pass


def _pgm_paths(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix.lower() == ".pgm")
        if not files:
            raise CliError(f"no .pgm files in {p}")
        return files
    if not p.exists():
        raise CliError(f"{p} does not exist")
    return [p]


def _exec_config(args) -> ExecConfig:
    return ExecConfig.from_env(args.workers)


def cmd_detect(args) -> int:
    paths = _pgm_paths(args.input)
    model = load_model(args.model)
    cfg = PipelineConfig(variant=args.variant, scale_step=args.scale_step,
                         model_path=args.model, threshold=args.threshold,
                         exec=_exec_config(args), nms_overlap=args.nms_iou)
    out = open(args.output, "w") if args.output else sys.stdout
    try:
        for path in paths:
            for d in detect(load_pgm(path), cfg, model):
                if len(paths) > 1:
                    row = json.loads(d.to_json())
                    row["image"] = path.name
                    out.write(json.dumps(row) + "\n")
                else:
                    out.write(d.to_json() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_bench(args) -> int:
    images = [load_pgm(p) for p in _pgm_paths(args.input)]
    variants = list(VARIANTS) if args.variant == "all" else [args.variant]
    model = load_model(args.model) if args.model else None
    cfg = PipelineConfig(variant=variants[0], scale_step=args.scale_step, exec=_exec_config(args))
    report = benchmark(images, cfg, args.reps, model=model,
                       compare_schemes=args.compare_schemes, variants=variants)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            report.write_csv(fh)
    else:
        report.write_csv(sys.stdout)
    for variant, work in report.work.items():
        log.info("%s: %d pixel-features per frame set", variant, work)
    return 0


def _load_samples(directory: str, role: str):
    d = Path(directory)
    if not d.is_dir():
        raise CliError(f"{role} directory {d} does not exist")
    files = sorted(f for f in d.iterdir() if f.suffix.lower() == ".pgm")
    if not files:
        raise CliError(f"no {role} samples (.pgm) in {d}")
    images = []
    for f in files:
        img = load_pgm(f)
        if (img.width, img.height) != (64, 128):
            raise CliError(f"{f}: sample is {img.width}x{img.height}, expected 64x128")
        images.append(img)
    return images


def cmd_train_fixture(args) -> int:
    pos = _load_samples(args.positives, "positive")
    neg = _load_samples(args.negatives, "negative")
    model = train_from_images(pos, neg, args.variant, args.epochs, args.seed,
                              args.learn_rate, args.regularization, args.lbp_bins)
    if args.threshold is not None:
        model = model.with_threshold(args.threshold)
    save_model(model, args.out)
    log.info("wrote %s model to %s", args.variant, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedscan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, variants):
        p.add_argument("--input", required=True, help="PGM file or directory of PGM files")
        p.add_argument("--variant", choices=variants, default=variants[-1])
        p.add_argument("--scale-step", type=float, default=1.2)
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: $PEDSCAN_WORKERS or 1)")

    p = sub.add_parser("detect", help="run a detection pipeline, print JSON lines")
    common(p, sorted(VARIANTS))
    p.set_defaults(variant="hoglbp")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--nms-iou", type=float, default=0.5)
    p.add_argument("--output", help="JSON-lines file (default stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="per-stage px/ns and FPS as CSV")
    common(p, sorted(VARIANTS) + ["all"])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--compare-schemes", action="store_true",
                   help="also time the naive LBP histogram and naive SVM kernels")
    p.add_argument("--model", help="model file (default: an all-zero model per variant)")
    p.add_argument("--csv", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train-fixture", help="fit a tiny SVM on 64x128 PGM samples")
    p.add_argument("--positives", required=True)
    p.add_argument("--negatives", required=True)
    p.add_argument("--variant", choices=sorted(VARIANTS), default="hoglbp")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learn-rate", type=float, default=1e-3)
    p.add_argument("--regularization", type=float, default=1e-2)
    p.add_argument("--lbp-bins", type=int, choices=(256, 59), default=256)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"pedscan {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
