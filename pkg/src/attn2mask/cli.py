"""Command-line front end.

Every subcommand is a thin adapter: parse flags, call the library, write
files.  Exit codes: 0 success, 1 usage error, 2 data error (reported as
a single ``ERROR <code>: <detail>`` line on stderr).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .affinity import build_affinity_graph, random_walk_propagate, seed_from_field
from .aggregate import aggregate_token, load_field, save_field
from .binarize import threshold_binarize
from .config import build_pipeline_config, read_config_file
from .densecrf import mean_field_refine, unary_from_field, unary_from_mask
from .errors import DataError, IoFailure
from .evalmetrics import batch_evaluate, format_report, write_report
from .fixtures import FixtureSpec, write_fixture
from .fusion import run_pipeline, select_threshold
from .report import render_report_figure
from .tensorio import (
    read_attention_stack,
    read_feature_image,
    read_mask,
    write_mask,
)

USAGE_ERROR = 1
DATA_ERROR = 2

IMAGE_SUFFIXES = (".pgm", ".ppm")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; remap usage problems to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _config_values(args):
    return read_config_file(args.config) if args.config else {}


def _pipeline_config(args, **extra):
    return build_pipeline_config(_config_values(args), **extra)


def _features_for(args, field):
    if getattr(args, "image", None):
        return read_feature_image(args.image)
    return field


def cmd_aggregate(args) -> int:
    stack = read_attention_stack(args.attn)
    field = aggregate_token(stack, args.token, args.size, args.size)
    save_field(field, args.out)
    return 0


def cmd_binarize(args) -> int:
    mask = threshold_binarize(load_field(args.field), args.gamma)
    write_mask(mask, args.out)
    return 0


def cmd_crf(args, parser: _Parser) -> int:
    if args.field is None and args.image is None:
        parser.error("crf needs --field or --image to supply features")
    cfg = _pipeline_config(args, crf_mode=args.mode)
    field = load_field(args.field) if args.field else None
    features = _features_for(args, field)
    if args.mask:
        unary = unary_from_mask(read_mask(args.mask), cfg.crf.mask_confidence)
    elif field is not None:
        unary = unary_from_field(field, cfg.crf.unary_epsilon)
    else:
        parser.error("crf needs --mask or --field to supply the unary")
    _, refined = mean_field_refine(unary, features, cfg.crf, mode=cfg.crf_mode)
    write_mask(refined, args.out)
    return 0


def cmd_affinity(args) -> int:
    cfg = _pipeline_config(args)
    field = load_field(args.field)
    features = _features_for(args, field)
    seeds = seed_from_field(field, cfg.affinity.tau_fg, cfg.affinity.tau_bg)
    graph = build_affinity_graph(features, cfg.affinity)
    draft = random_walk_propagate(graph, seeds, cfg.affinity.walk_iters)
    save_field(draft, args.out)
    return 0


def cmd_select_threshold(args) -> int:
    cfg = _pipeline_config(args)
    gamma, score = select_threshold(load_field(args.field), load_field(args.draft), cfg.grid)
    print(f"gamma={gamma:.6f} score={score:.6f}")
    return 0


def _paired_image(image_dir: Path, stem: str) -> Path:
    for suffix in IMAGE_SUFFIXES:
        candidate = image_dir / (stem + suffix)
        if candidate.is_file():
            return candidate
    raise IoFailure(f"no image named {stem}{'|'.join(IMAGE_SUFFIXES)} in {image_dir}")


def _run_one(attn_path: Path, image_path: Path | None, out_path: Path, cfg) -> None:
    stack = read_attention_stack(attn_path)
    image = read_feature_image(image_path) if image_path else None
    mask = run_pipeline(stack, cfg, image)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_mask(mask, out_path)


def cmd_pipeline(args, parser: _Parser) -> int:
    cfg = _pipeline_config(
        args,
        method=args.method,
        token=args.token,
        target_size=args.size,
        aggregate_size=args.agg_size,
        crf_mode=args.mode,
    )
    attn = Path(args.attn)
    if attn.is_dir():
        image_dir = Path(args.image) if args.image else None
        if image_dir is not None and not image_dir.is_dir():
            parser.error("--image must be a directory when --attn is a directory")
        out_dir = Path(args.out)
        jobs = []
        for attn_path in sorted(attn.glob("*.atns")):
            stem = attn_path.stem
            image_path = _paired_image(image_dir, stem) if image_dir else None
            jobs.append((attn_path, image_path, out_dir / (stem + ".pgm")))
        if args.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                for future in [pool.submit(_run_one, a, i, o, cfg) for a, i, o in jobs]:
                    future.result()
        else:
            for a, i, o in jobs:
                _run_one(a, i, o, cfg)
    else:
        image_path = Path(args.image) if args.image else None
        _run_one(attn, image_path, Path(args.out), cfg)
    return 0


def cmd_eval(args) -> int:
    report = batch_evaluate(args.pred, args.gt, threads=args.threads)
    if args.out:
        write_report(report, args.out, args.format)
        print(f"mean_iou={report.mean_iou:.6f} count={report.count}")
    else:
        sys.stdout.write(format_report(report, args.format))
    if args.figure:
        render_report_figure(report, args.figure)
    return 0


def cmd_fixture(args) -> int:
    spec = FixtureSpec(
        shape=args.shape,
        size=args.size,
        geometry=args.geometry or (),
        noise=args.noise,
        blur_radius=args.blur,
        seed=args.seed,
        steps=args.steps,
        layer_resolutions=args.layers,
    )
    for path in write_fixture(spec, args.out):
        print(path)
    return 0


def cmd_inspect(args) -> int:
    stack = read_attention_stack(args.attn)
    print(f"records={len(stack.records)} token_count={stack.token_count}")
    sizes = sorted({(rec.height, rec.width) for rec in stack.records})
    print("resolutions=" + ",".join(f"{h}x{w}" for h, w in sizes))
    for rec in stack.records:
        print(
            f"record step={rec.step} layer={rec.layer} token={rec.token} "
            f"size={rec.height}x{rec.width} "
            f"min={float(rec.values.min()):.6f} max={float(rec.values.max()):.6f}"
        )
    return 0


def _add_config(sub):
    sub.add_argument("--config", help="INI-style parameter file")


def build_parser() -> _Parser:
    parser = _Parser(prog="attn2mask", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("aggregate", help="average per-token attention maps into one field")
    sub.add_argument("--attn", required=True)
    sub.add_argument("--token", type=int, default=0)
    sub.add_argument("--size", type=_positive_int, default=64)
    sub.add_argument("--out", required=True)

    sub = commands.add_parser("binarize", help="threshold a field into a mask")
    sub.add_argument("--field", required=True)
    sub.add_argument("--gamma", type=float, required=True)
    sub.add_argument("--out", required=True)

    sub = commands.add_parser("crf", help="mean-field refine a unary into a mask")
    sub.add_argument("--field")
    sub.add_argument("--mask")
    sub.add_argument("--image")
    sub.add_argument("--mode", choices=("brute", "fast"))
    sub.add_argument("--out", required=True)
    _add_config(sub)

    sub = commands.add_parser("affinity", help="seeded random-walk propagation over a field")
    sub.add_argument("--field", required=True)
    sub.add_argument("--image")
    sub.add_argument("--out", required=True)
    _add_config(sub)

    sub = commands.add_parser("select-threshold", help="grid-search gamma against a draft")
    sub.add_argument("--field", required=True)
    sub.add_argument("--draft", required=True)
    _add_config(sub)

    sub = commands.add_parser("pipeline", help="full stack-to-mask run (file or directory)")
    sub.add_argument("--attn", required=True)
    sub.add_argument("--image")
    sub.add_argument("--out", required=True)
    sub.add_argument("--method", type=int, choices=(1, 2))
    sub.add_argument("--token", type=int)
    sub.add_argument("--size", type=_positive_int)
    sub.add_argument("--agg-size", type=_positive_int)
    sub.add_argument("--mode", choices=("brute", "fast"))
    sub.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    _add_config(sub)

    sub = commands.add_parser("eval", help="score prediction masks against ground truth")
    sub.add_argument("--pred", required=True)
    sub.add_argument("--gt", required=True)
    sub.add_argument("--out")
    sub.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sub.add_argument("--figure")
    sub.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)

    sub = commands.add_parser("fixture", help="write a synthetic stack/image/truth triplet")
    sub.add_argument("--out", required=True)
    sub.add_argument("--shape", choices=("disk", "rectangle", "two_blobs"), default="disk")
    sub.add_argument("--size", type=_positive_int, default=64)
    sub.add_argument("--geometry", type=_int_list)
    sub.add_argument("--noise", type=float, default=0.0)
    sub.add_argument("--blur", type=int, default=0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--steps", type=_positive_int, default=2)
    sub.add_argument("--layers", type=_int_list, default=(8, 16, 32, 64))

    sub = commands.add_parser("inspect", help="print a stack summary, one line per record")
    sub.add_argument("--attn", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "aggregate": cmd_aggregate,
        "binarize": cmd_binarize,
        "affinity": cmd_affinity,
        "select-threshold": cmd_select_threshold,
        "eval": cmd_eval,
        "fixture": cmd_fixture,
        "inspect": cmd_inspect,
    }
    try:
        if args.command == "crf":
            return cmd_crf(args, parser)
        if args.command == "pipeline":
            return cmd_pipeline(args, parser)
        return handlers[args.command](args)
    except DataError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
