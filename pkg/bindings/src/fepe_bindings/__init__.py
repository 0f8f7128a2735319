"""Array-in/array-out bindings over the fepe core.

These wrappers accept plain nested lists or numpy arrays and return dense
numeric arrays, so they drop straight into deep-learning data loaders
without any framework-specific tensor types. Arrays that are already
row-major and contiguous are used as-is; anything else incurs exactly one
copy. The heavy kernels release the GIL (numba nogil / numpy), so loader
worker threads scale.

Outputs are value-identical to the fepe CLI's serialized containers and
detection JSON for the same inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from fepe.evalkit import EvalConfig, evaluate
from fepe.geometry import Polygon
from fepe.labelgen import AnnotatedImage, LabelGenConfig, TextInstance, gen_labelset
from fepe.postproc import Detection, DetectionSet, PostprocConfig, reconstruct

__all__ = ["BoundLabelSet", "py_gen_labelset", "py_reconstruct", "py_evaluate"]

__version__ = "0.1.0"


@dataclass
class BoundLabelSet:
    """Dense label arrays plus the metadata the CLI writes alongside them."""

    text_map: np.ndarray  # u8 HxW
    kernel_map: np.ndarray  # u8 HxW
    ignore_mask: np.ndarray  # u8 HxW
    scale_map: np.ndarray  # f32 HxW
    surrounding: np.ndarray  # u16 HxWx4, order left/right/up/down
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "text_map": self.text_map,
            "kernel_map": self.kernel_map,
            "ignore_mask": self.ignore_mask,
            "scale_map": self.scale_map,
            "surrounding": self.surrounding,
        }


def _instances(points_lists, ignore_flags):
    if ignore_flags is None:
        ignore_flags = [False] * len(points_lists)
    if len(ignore_flags) != len(points_lists):
        raise ValueError(
            f"{len(points_lists)} point lists but {len(ignore_flags)} ignore flags"
        )
    return [
        TextInstance(Polygon(points), bool(flag))
        for points, flag in zip(points_lists, ignore_flags)
    ]


def py_gen_labelset(
    points_lists,
    ignore_flags,
    height: int,
    width: int,
    delta: float = 0.4,
    a_min: float = 16.0,
    mu: int = 5,
    image_id: str = "",
) -> BoundLabelSet:
    """Generate the full label set for one image.

    points_lists is a sequence of (N_i, 2) point arrays or nested lists in
    pixel coordinates; ignore_flags marks don't-care instances (None means
    all real). Raises the core's exceptions unchanged on invalid input.
    """
    cfg = LabelGenConfig(delta=delta, a_min=a_min, mu=mu)
    img = AnnotatedImage(int(height), int(width), _instances(points_lists, ignore_flags), image_id)
    labels = gen_labelset(img, cfg)
    meta = {
        "height": int(height),
        "width": int(width),
        "image_id": image_id,
        "delta": delta,
        "a_min": a_min,
        "mu": mu,
    }
    return BoundLabelSet(
        text_map=labels.text_map.astype("<u1", copy=False),
        kernel_map=labels.kernel_map.astype("<u1", copy=False),
        ignore_mask=labels.ignore_mask.astype("<u1", copy=False),
        scale_map=labels.scale_map.astype("<f4", copy=False),
        surrounding=labels.surrounding_maps.astype("<u2", copy=False),
        meta=meta,
    )


def py_reconstruct(
    prob,
    bin_thresh: float = 0.3,
    expand_ratio: float = 1.45,
    min_area: float = 16.0,
    score_thresh: float = 0.7,
):
    """Detections from a 2D kernel probability array.

    Returns a list of ((N, 2) float64 points array, score) pairs, equal in
    value to the CLI's detection JSON for the same map.
    """
    arr = np.asarray(prob, np.float64)
    if arr.ndim != 2:
        raise ValueError(f"probability array must be 2D, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    cfg = PostprocConfig(
        bin_thresh=bin_thresh,
        expand_ratio=expand_ratio,
        min_kernel_area=min_area,
        score_thresh=score_thresh,
    )
    dets = reconstruct(arr, cfg)
    return [(det.polygon.points.copy(), det.score) for det in dets.detections]


def py_evaluate(det_lists, gt_lists, iou_thresh: float = 0.5) -> dict:
    """Dataset-level precision/recall/F from plain arrays.

    det_lists: per image, a list of ((N, 2) points, score) pairs.
    gt_lists: per image, a list of ((N, 2) points, ignore_flag) pairs.
    """
    det_sets = []
    gt_images = []
    for i, (dets, gts) in enumerate(zip(det_lists, gt_lists)):
        image_id = f"img{i}"
        det_sets.append(
            DetectionSet(image_id, [Detection(Polygon(pts), float(s)) for pts, s in dets])
        )
        instances = [TextInstance(Polygon(pts), bool(flag)) for pts, flag in gts]
        h = w = 1
        for inst in instances:
            _, _, maxx, maxy = inst.polygon.bounds()
            w = max(w, int(np.ceil(maxx)) + 1)
            h = max(h, int(np.ceil(maxy)) + 1)
        gt_images.append(AnnotatedImage(h, w, instances, image_id))
    report = evaluate(det_sets, gt_images, EvalConfig(iou_thresh=iou_thresh))
    return report.to_dict()
