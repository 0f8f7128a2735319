"""Parsers for the benchmark annotation formats: ICDAR2015 4-point quads,
generic even-count polygon CSV (CTW1500 / Total-Text style) and MSRA-TD500
rotated rectangles."""

import enum
import json
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InvalidPolygon, IoError, ParseError
from .geometry import Polygon
from .labelgen import AnnotatedImage, TextInstance

log = logging.getLogger("fepe.ingest")

IGNORE_TOKENS = ("###", "#")


class AnnotationFormat(str, enum.Enum):
    ICDAR15 = "icdar15"
    POLY_CSV = "polycsv"
    TD500 = "td500"


@dataclass(frozen=True)
class PairingRule:
    """Maps annotation filenames to image ids: gt_<id>.txt <-> <id>.jpg."""

    gt_prefix: str = "gt_"
    gt_suffix: str = ".txt"
    image_exts: tuple = (".jpg", ".jpeg", ".png", ".bmp", ".gif")

    def image_id(self, gt_filename: str):
        name = os.path.basename(gt_filename)
        if not (name.startswith(self.gt_prefix) and name.endswith(self.gt_suffix)):
            return None
        return name[len(self.gt_prefix):len(name) - len(self.gt_suffix)]


def _coord(token: str, line_no) -> float:
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric coordinate {token!r}", line_no) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite coordinate {token!r}", line_no)
    return value


def _instance(points, ignore, line_no) -> TextInstance:
    try:
        return TextInstance(Polygon(points), ignore)
    except InvalidPolygon as exc:
        raise ParseError(f"degenerate polygon: {exc}", line_no) from None


def parse_icdar15_line(line: str, line_no=None) -> TextInstance:
    """x1,y1,...,x4,y4,transcription; "###" marks a don't-care region.

    The transcription may itself contain commas, so only the first eight
    are treated as separators.
    """
    parts = line.strip().split(",", 8)
    if len(parts) < 8:
        raise ParseError(f"expected 8 coordinates, got {len(parts)} fields", line_no)
    coords = [_coord(tok, line_no) for tok in parts[:8]]
    transcription = parts[8] if len(parts) > 8 else ""
    pts = np.asarray(coords, np.float64).reshape(4, 2)
    return _instance(pts, transcription.strip() == "###", line_no)


def parse_poly_csv_line(line: str, line_no=None, bbox_offsets: bool = False) -> TextInstance:
    """Even-length numeric coordinate prefix, optional trailing transcription.

    With bbox_offsets=True the line is the offset encoding some curved-text
    releases use: xmin,ymin,xmax,ymax then pairs of offsets added to
    (xmin, ymin) to obtain the absolute points.
    """
    parts = line.strip().split(",")
    n_coords = 0
    for tok in parts:
        try:
            float(tok)
        except ValueError:
            break
        n_coords += 1
    if n_coords % 2 != 0:
        raise ParseError(f"odd coordinate count {n_coords}", line_no)
    min_coords = 6 + 4 if bbox_offsets else 6
    if n_coords < min_coords:
        raise ParseError(f"need at least {min_coords} coordinates, got {n_coords}", line_no)
    coords = [_coord(tok, line_no) for tok in parts[:n_coords]]
    transcription = ",".join(parts[n_coords:]).strip()
    pts = np.asarray(coords, np.float64).reshape(-1, 2)
    if bbox_offsets:
        anchor = pts[0]  # (xmin, ymin); pts[1] is the unused (xmax, ymax)
        pts = pts[2:] + anchor
    return _instance(pts, transcription in IGNORE_TOKENS, line_no)


def parse_td500_line(line: str, line_no=None) -> TextInstance:
    """index difficulty x y w h angle(rad); difficulty 1 marks hard boxes."""
    parts = line.split()
    if len(parts) != 7:
        raise ParseError(f"expected 7 fields, got {len(parts)}", line_no)
    _, difficulty, x, y, w, h, angle = (_coord(tok, line_no) for tok in parts)
    cx, cy = x + w / 2.0, y + h / 2.0
    corners = np.array(
        [[x, y], [x + w, y], [x + w, y + h], [x, y + h]], np.float64
    )
    ca, sa = math.cos(angle), math.sin(angle)
    rel = corners - (cx, cy)
    rot = np.stack(
        [rel[:, 0] * ca - rel[:, 1] * sa + cx, rel[:, 0] * sa + rel[:, 1] * ca + cy],
        axis=1,
    )
    return _instance(rot, difficulty == 1, line_no)


_PARSERS = {
    AnnotationFormat.ICDAR15: parse_icdar15_line,
    AnnotationFormat.POLY_CSV: parse_poly_csv_line,
    AnnotationFormat.TD500: parse_td500_line,
}


def serialize_instance(inst: TextInstance, fmt: AnnotationFormat) -> str:
    """Inverse of the line parsers (TD500 rects round-trip via POLY_CSV)."""
    coords = ",".join(_fmt_num(v) for v in inst.polygon.points.ravel())
    if fmt == AnnotationFormat.ICDAR15:
        if len(inst.polygon) != 4:
            raise InvalidPolygon("icdar15 lines need exactly 4 points")
        return f"{coords},{'###' if inst.ignore else 'text'}"
    if fmt == AnnotationFormat.POLY_CSV:
        return f"{coords},{'###' if inst.ignore else 'text'}"
    raise ValueError(f"cannot serialize format {fmt}")


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_annotation_file(path, fmt: AnnotationFormat, strict: bool = False,
                          bbox_offsets: bool = False):
    """Parse one annotation file into TextInstances.

    Malformed lines raise in strict mode; otherwise they are skipped with a
    warning. Returns (instances, warnings).
    """
    parser = _PARSERS[fmt]
    if bbox_offsets:
        if fmt != AnnotationFormat.POLY_CSV:
            raise InputError("bbox_offsets applies only to the polycsv format")
        parser = lambda line, no: parse_poly_csv_line(line, no, bbox_offsets=True)
    try:
        with open(path, "r", encoding="utf-8-sig", errors="replace") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    instances = []
    warnings = []
    for no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            instances.append(parser(line, no))
        except ParseError as exc:
            if strict:
                raise
            msg = f"{path}: skipped {exc}"
            warnings.append(msg)
            log.warning(msg)
    return instances, warnings


def read_image_size(path) -> tuple:
    """(height, width) from the image header without decoding pixels."""
    from PIL import Image

    try:
        with Image.open(path) as im:
            return im.height, im.width
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc


def load_dataset(
    gt_dir,
    fmt: AnnotationFormat,
    images_dir=None,
    sizes=None,
    pairing: PairingRule = PairingRule(),
    strict: bool = False,
    bbox_offsets: bool = False,
):
    """Load a directory of per-image annotation files into AnnotatedImages.

    Image dimensions come from the paired image header under images_dir or
    from a sizes mapping {image_id: (height, width)} when images are
    absent. Unpaired files are skipped with a warning (strict: error).
    Results are ordered by filename sort.
    """
    if not os.path.isdir(gt_dir):
        raise IoError(f"annotation directory not found: {gt_dir}")
    sizes = dict(sizes or {})
    images = []
    for name in sorted(os.listdir(gt_dir)):
        image_id = pairing.image_id(name)
        if image_id is None:
            continue
        dims = None
        if image_id in sizes:
            dims = tuple(int(v) for v in sizes[image_id])
        elif images_dir is not None:
            for ext in pairing.image_exts:
                candidate = os.path.join(images_dir, image_id + ext)
                if os.path.exists(candidate):
                    dims = read_image_size(candidate)
                    break
        if dims is None:
            msg = f"no image or size entry for {image_id!r}; skipped"
            if strict:
                raise InputError(msg)
            log.warning(msg)
            continue
        instances, _ = parse_annotation_file(
            os.path.join(gt_dir, name), fmt, strict=strict, bbox_offsets=bbox_offsets
        )
        images.append(AnnotatedImage(dims[0], dims[1], instances, image_id))
    return images


def annotated_image_to_dict(img: AnnotatedImage) -> dict:
    return {
        "image_id": img.image_id,
        "height": img.height,
        "width": img.width,
        "instances": [
            {"points": inst.polygon.points.tolist(), "ignore": inst.ignore}
            for inst in img.instances
        ],
    }


def annotated_image_from_dict(data: dict) -> AnnotatedImage:
    instances = [
        TextInstance(Polygon(entry["points"]), bool(entry["ignore"]))
        for entry in data["instances"]
    ]
    return AnnotatedImage(int(data["height"]), int(data["width"]), instances, str(data["image_id"]))


def load_sizes_sidecar(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read sizes file {path}: {exc}") from exc
