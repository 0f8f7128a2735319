"""Command-line front end: gen-labels, reconstruct, evaluate, gradcheck,
viz and bench subcommands.

Exit codes: 0 success, 1 data failure, 2 usage error. FEPE_LOG selects the
log level (error|warn|info|debug).
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import gradcheck, perf, viz
from .container import (
    list_containers,
    read_container,
    score_map_from_container,
    write_labelset,
)
from .errors import FepeError
from .evalkit import EvalConfig, evaluate
from .ingest import (
    AnnotationFormat,
    PairingRule,
    load_dataset,
    load_sizes_sidecar,
    parse_annotation_file,
)
from .labelgen import AnnotatedImage, LabelGenConfig, gen_labelset
from .postproc import DetectionSet, PostprocConfig, reconstruct

log = logging.getLogger("fepe")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = _LOG_LEVELS.get(os.environ.get("FEPE_LOG", "warn").strip().lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _positive_int(value):
    n = int(value)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return n


def _size_arg(value):
    try:
        h, w = value.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fepe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-labels", help="generate label containers from annotations")
    gen.add_argument("--gts", required=True, help="annotation directory")
    gen.add_argument("--images", help="image directory for dimension lookup")
    gen.add_argument("--sizes", help="JSON sidecar {image_id: [height, width]}")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--ann-format", required=True, choices=[f.value for f in AnnotationFormat])
    gen.add_argument("--size", type=_size_arg, help="rescale to HxW before rasterization")
    gen.add_argument("--delta", type=float, default=0.4, help="shrinking ratio")
    gen.add_argument("--min-area", type=float, default=16.0, help="minimum kernel area (px^2)")
    gen.add_argument("--mu", type=int, default=5, help="perception window side (odd)")
    gen.add_argument("--gt-prefix", default="gt_")
    gen.add_argument("--gt-suffix", default=".txt")
    gen.add_argument("--bbox-offsets", action="store_true",
                     help="polycsv lines are bbox + point offsets")
    gen.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)
    gen.add_argument("--strict", action="store_true")
    gen.add_argument("--seed", type=int, default=0)

    rec = sub.add_parser("reconstruct", help="turn score-map containers into detection JSON")
    rec.add_argument("--maps", required=True, help="directory of score-map containers")
    rec.add_argument("--out", required=True, help="output directory for detection JSON")
    rec.add_argument("--bin-thresh", type=float, default=0.3)
    rec.add_argument("--expand-ratio", type=float, default=1.45)
    rec.add_argument("--min-area", type=float, default=16.0)
    rec.add_argument("--score-thresh", type=float, default=0.7)
    rec.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)

    ev = sub.add_parser("evaluate", help="score detections against ground truth")
    ev.add_argument("--dets", required=True, help="directory of detection JSON files")
    ev.add_argument("--gts", required=True, help="annotation directory")
    ev.add_argument("--ann-format", required=True, choices=[f.value for f in AnnotationFormat])
    ev.add_argument("--iou", type=float, default=0.5)
    ev.add_argument("--ignore-overlap", choices=["iou", "intersection"], default="iou")
    ev.add_argument("--gt-prefix", default="gt_")
    ev.add_argument("--gt-suffix", default=".txt")
    ev.add_argument("--bbox-offsets", action="store_true",
                    help="polycsv lines are bbox + point offsets")
    ev.add_argument("--strict", action="store_true")

    gc = sub.add_parser("gradcheck", help="verify analytic loss gradients")
    gc.add_argument("--loss", choices=["bce", "dice", "ratio", "all"], default="all")
    gc.add_argument("--trials", type=int, default=1000)
    gc.add_argument("--seed", type=int, default=0)

    vz = sub.add_parser("viz", help="render label containers and detections to PNG")
    vz.add_argument("--container", help="one label container directory")
    vz.add_argument("--dets", help="detections JSON file")
    vz.add_argument("--image", help="source image for detection overlay")
    vz.add_argument("--out", required=True, help="output directory")

    be = sub.add_parser("bench", help="benchmark naive vs integral surrounding maps")
    be.add_argument("--sizes", type=_positive_int, nargs="+", default=[256, 512])
    be.add_argument("--mus", type=int, nargs="+", default=[3, 5, 7])
    be.add_argument("--reps", type=int, default=5)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--parallel", type=int, default=0, help="also time across a thread pool")

    return parser


def _validate(parser, args) -> None:
    if args.command == "gen-labels":
        if not 0.0 < args.delta < 1.0:
            parser.error(f"--delta must be in (0, 1), got {args.delta}")
        if args.mu < 1 or args.mu % 2 == 0:
            parser.error(f"--mu must be odd and >= 1, got {args.mu}")
        if args.min_area < 0:
            parser.error(f"--min-area must be >= 0, got {args.min_area}")
        if not os.path.isdir(args.gts):
            parser.error(f"annotation directory not found: {args.gts}")
    elif args.command == "reconstruct":
        if not 0.0 < args.bin_thresh < 1.0:
            parser.error(f"--bin-thresh must be in (0, 1), got {args.bin_thresh}")
        if args.expand_ratio <= 0:
            parser.error(f"--expand-ratio must be > 0, got {args.expand_ratio}")
        if not 0.0 <= args.score_thresh <= 1.0:
            parser.error(f"--score-thresh must be in [0, 1], got {args.score_thresh}")
        if not os.path.isdir(args.maps):
            parser.error(f"score-map directory not found: {args.maps}")
    elif args.command == "evaluate":
        if not 0.0 < args.iou <= 1.0:
            parser.error(f"--iou must be in (0, 1], got {args.iou}")
        if not os.path.isdir(args.dets):
            parser.error(f"detections directory not found: {args.dets}")
        if not os.path.isdir(args.gts):
            parser.error(f"annotation directory not found: {args.gts}")
    elif args.command == "gradcheck":
        if args.trials <= 0:
            parser.error(f"--trials must be > 0, got {args.trials}")
    elif args.command == "viz":
        if not args.container and not args.dets:
            parser.error("viz needs --container and/or --dets")
        if args.dets and not args.image:
            parser.error("--dets requires --image for the overlay")
    elif args.command == "bench":
        if args.reps < 3:
            parser.error(f"--reps must be >= 3, got {args.reps}")
        for mu in args.mus:
            if mu < 1 or mu % 2 == 0:
                parser.error(f"--mus entries must be odd and >= 1, got {mu}")


def cmd_gen_labels(args) -> int:
    sizes = load_sizes_sidecar(args.sizes) if args.sizes else None
    pairing = PairingRule(gt_prefix=args.gt_prefix, gt_suffix=args.gt_suffix)
    fmt = AnnotationFormat(args.ann_format)
    images = load_dataset(
        args.gts, fmt, images_dir=args.images, sizes=sizes, pairing=pairing,
        strict=args.strict, bbox_offsets=args.bbox_offsets,
    )
    cfg = LabelGenConfig(delta=args.delta, a_min=args.min_area, mu=args.mu, target_size=args.size)
    os.makedirs(args.out, exist_ok=True)
    meta = {"mu": cfg.mu, "delta": cfg.delta, "a_min": cfg.a_min}
    t0 = time.perf_counter()

    def work(img: AnnotatedImage):
        labels = gen_labelset(img, cfg)
        write_labelset(args.out, img.image_id, labels, meta)
        return len(labels.kernel_polygons)

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        kernel_counts = list(pool.map(work, images))
    dt = time.perf_counter() - t0
    print(
        f"gen-labels: {len(images)} images, {sum(kernel_counts)} kernels "
        f"-> {args.out} in {dt:.2f}s"
    )
    return 0


def cmd_reconstruct(args) -> int:
    cfg = PostprocConfig(
        bin_thresh=args.bin_thresh,
        expand_ratio=args.expand_ratio,
        min_kernel_area=args.min_area,
        score_thresh=args.score_thresh,
    )
    containers = list_containers(args.maps)
    os.makedirs(args.out, exist_ok=True)

    def work(cdir):
        meta, score = score_map_from_container(cdir)
        image_id = str(meta.get("image_id", os.path.basename(cdir)))
        dets = reconstruct(score, cfg, image_id=image_id)
        path = os.path.join(args.out, f"{image_id}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dets.to_json())
            fh.write("\n")
        return len(dets.detections)

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        counts = list(pool.map(work, containers))
    dt = time.perf_counter() - t0
    print(
        f"reconstruct: {len(containers)} maps, {sum(counts)} detections "
        f"-> {args.out} in {dt:.2f}s"
    )
    return 0


def _gt_bounds_image(image_id, instances) -> AnnotatedImage:
    # evaluation only compares polygons; size the canvas to fit them
    h = w = 1
    for inst in instances:
        _, _, maxx, maxy = inst.polygon.bounds()
        w = max(w, int(math.ceil(maxx)) + 1)
        h = max(h, int(math.ceil(maxy)) + 1)
    return AnnotatedImage(h, w, instances, image_id)


def cmd_evaluate(args) -> int:
    fmt = AnnotationFormat(args.ann_format)
    pairing = PairingRule(gt_prefix=args.gt_prefix, gt_suffix=args.gt_suffix)
    det_files = sorted(f for f in os.listdir(args.dets) if f.endswith(".json"))
    det_sets = []
    for name in det_files:
        with open(os.path.join(args.dets, name), "r", encoding="utf-8") as fh:
            data = json.load(fh)
        dset = DetectionSet.from_dict(data)
        if not dset.image_id:
            dset.image_id = name[:-5]
        det_sets.append(dset)
    gt_ids = {
        pairing.image_id(name): name
        for name in os.listdir(args.gts)
        if pairing.image_id(name) is not None
    }
    det_ids = [d.image_id for d in det_sets]
    missing = [i for i in det_ids if i not in gt_ids]
    extra = sorted(set(gt_ids) - set(det_ids))
    if missing or extra:
        raise FepeError(
            f"image ids do not align: missing gts for {missing or 'none'}, "
            f"missing detections for {extra or 'none'}"
        )
    gt_images = []
    for dset in det_sets:
        instances, _ = parse_annotation_file(
            os.path.join(args.gts, gt_ids[dset.image_id]), fmt,
            strict=args.strict, bbox_offsets=args.bbox_offsets,
        )
        gt_images.append(_gt_bounds_image(dset.image_id, instances))
    report = evaluate(det_sets, gt_images, EvalConfig(args.iou, args.ignore_overlap))
    print(report.to_json())
    return 0


def cmd_gradcheck(args) -> int:
    if args.loss == "all":
        names = gradcheck.LOSS_NAMES
    elif args.loss == "ratio":
        names = ("ratio-scale", "ratio-surrounding")
    else:
        names = (args.loss,)
    results = gradcheck.check_losses(names, args.trials, args.seed)
    ok = True
    for name, err in results.items():
        status = "ok" if err < 1e-4 else "FAIL"
        print(f"{name:18s} max_rel_err={err:.3e} {status}")
        ok = ok and err < 1e-4
    return 0 if ok else 1


def cmd_viz(args) -> int:
    written = []
    if args.container:
        meta, arrays = read_container(args.container)
        written += viz.render_container(meta, arrays, args.out)
    if args.dets:
        if not os.path.exists(args.image):
            raise FepeError(f"image not found: {args.image}")
        with open(args.dets, "r", encoding="utf-8") as fh:
            dset = DetectionSet.from_dict(json.load(fh))
        os.makedirs(args.out, exist_ok=True)
        out_path = os.path.join(args.out, f"{dset.image_id or 'detections'}_overlay.png")
        written.append(viz.render_detections(args.image, dset, out_path))
    for path in written:
        print(path)
    return 0


def cmd_bench(args) -> int:
    report = perf.run_bench(
        args.sizes, args.mus, repetitions=args.reps, seed=args.seed, parallel_workers=args.parallel
    )
    print(report.to_json())
    return 0


_COMMANDS = {
    "gen-labels": cmd_gen_labels,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
    "gradcheck": cmd_gradcheck,
    "viz": cmd_viz,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        return _COMMANDS[args.command](args)
    except FepeError as exc:
        print(f"fepe {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fepe {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
