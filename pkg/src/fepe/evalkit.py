"""IoU-based detection evaluation: precision, recall and F-measure with
one-to-one greedy matching and ignore-region handling."""

import json
from dataclasses import dataclass, field

from .errors import DomainError, InputError
from .geometry import Polygon


@dataclass(frozen=True)
class EvalConfig:
    iou_thresh: float = 0.5
    # "iou" discards a detection when IoU with an ignore region exceeds the
    # threshold; "intersection" uses intersection area / detection area.
    ignore_overlap: str = "iou"

    def __post_init__(self):
        if not 0.0 < self.iou_thresh <= 1.0:
            raise DomainError(f"iou_thresh must be in (0, 1], got {self.iou_thresh}")
        if self.ignore_overlap not in ("iou", "intersection"):
            raise DomainError(f"unknown ignore_overlap mode {self.ignore_overlap!r}")


@dataclass
class EvalReport:
    precision: float
    recall: float
    fmeasure: float
    tp: int
    num_dets: int
    num_gts: int
    per_image: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "fmeasure": self.fmeasure,
            "tp": self.tp,
            "num_dets": self.num_dets,
            "num_gts": self.num_gts,
            "per_image": self.per_image,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _fixed(poly: Polygon):
    geom = poly.to_shapely()
    if not geom.is_valid:
        geom = geom.buffer(0)
    return geom


def polygon_iou(a: Polygon, b: Polygon) -> float:
    """Intersection area over union area; exactly symmetric."""
    ga, gb = _fixed(a), _fixed(b)
    if ga.wkb <= gb.wkb:  # canonical order so iou(a, b) == iou(b, a) bit-exactly
        first, second = ga, gb
    else:
        first, second = gb, ga
    inter = first.intersection(second).area
    if inter <= 0.0:
        return 0.0
    union = ga.area + gb.area - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


def _ignore_overlap(det: Polygon, ign: Polygon, mode: str) -> float:
    if mode == "iou":
        return polygon_iou(det, ign)
    gd = _fixed(det)
    if gd.area <= 0.0:
        return 0.0
    return float(gd.intersection(_fixed(ign)).area / gd.area)


def match_image(det_polys, gt_instances, cfg: EvalConfig):
    """One image: returns (tp, counted dets, counted gts, match triples)."""
    ignores = [g.polygon for g in gt_instances if g.ignore]
    gts = [g.polygon for g in gt_instances if not g.ignore]
    kept = []
    for di, det in enumerate(det_polys):
        discarded = any(
            _ignore_overlap(det, ign, cfg.ignore_overlap) > cfg.iou_thresh for ign in ignores
        )
        if not discarded:
            kept.append((di, det))
    pairs = []
    for ki, (di, det) in enumerate(kept):
        for gi, gt in enumerate(gts):
            iou = polygon_iou(det, gt)
            if iou >= cfg.iou_thresh:
                pairs.append((iou, di, gi))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    det_used = set()
    gt_used = set()
    matches = []
    for iou, di, gi in pairs:
        if di in det_used or gi in gt_used:
            continue
        det_used.add(di)
        gt_used.add(gi)
        matches.append({"det": di, "gt": gi, "iou": iou})
    return len(matches), len(kept), len(gts), matches


def evaluate(det_sets, gt_images, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Aggregate precision/recall/F over aligned per-image detections and
    ground truths. det_sets is a list of DetectionSet, gt_images a list of
    AnnotatedImage; ids must match pairwise."""
    if len(det_sets) != len(gt_images):
        raise InputError(f"{len(det_sets)} detection sets vs {len(gt_images)} gt images")
    tp = num_dets = num_gts = 0
    per_image = []
    for dset, img in zip(det_sets, gt_images):
        if dset.image_id != img.image_id:
            raise InputError(f"image id mismatch: {dset.image_id!r} vs {img.image_id!r}")
        polys = [d.polygon for d in dset.detections]
        itp, idets, igts, matches = match_image(polys, img.instances, cfg)
        tp += itp
        num_dets += idets
        num_gts += igts
        per_image.append(
            {
                "image_id": img.image_id,
                "tp": itp,
                "num_dets": idets,
                "num_gts": igts,
                "matches": matches,
            }
        )
    precision = tp / num_dets if num_dets else 0.0
    recall = tp / num_gts if num_gts else 0.0
    fmeasure = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(precision, recall, fmeasure, tp, num_dets, num_gts, per_image)
