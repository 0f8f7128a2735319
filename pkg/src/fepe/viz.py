"""PNG renderings of label containers and detection overlays."""

import logging
import os

import numpy as np
from PIL import Image, ImageDraw

log = logging.getLogger("fepe.viz")

_TINTS = {
    "text_map": (90, 200, 90),
    "kernel_map": (230, 120, 40),
}


def _save(img: Image.Image, path: str) -> str:
    img.save(path, format="PNG")
    return path


def render_mask(mask, tint) -> Image.Image:
    rgb = np.zeros(mask.shape + (3,), np.uint8)
    rgb[mask > 0] = tint
    return Image.fromarray(rgb)


def render_heat(values) -> Image.Image:
    """Black -> red -> yellow -> white ramp, normalized to the map max."""
    v = np.asarray(values, np.float64)
    peak = v.max()
    t = v / peak if peak > 0 else np.zeros_like(v)
    stops = np.array([0.0, 1 / 3, 2 / 3, 1.0])
    reds = np.array([0.0, 255.0, 255.0, 255.0])
    greens = np.array([0.0, 0.0, 255.0, 255.0])
    blues = np.array([0.0, 0.0, 0.0, 255.0])
    rgb = np.stack(
        [np.interp(t, stops, chan) for chan in (reds, greens, blues)], axis=-1
    ).astype(np.uint8)
    return Image.fromarray(rgb)


def render_surrounding_tile(surrounding) -> Image.Image:
    """The four directional channels as a 2x2 tile (left/right over up/down)."""
    h, w, _ = surrounding.shape
    tile = Image.new("RGB", (2 * w + 2, 2 * h + 2), (20, 20, 20))
    for n, (ox, oy) in enumerate(((0, 0), (w + 2, 0), (0, h + 2), (w + 2, h + 2))):
        tile.paste(render_heat(surrounding[:, :, n]), (ox, oy))
    return tile


def render_container(meta, arrays, out_dir) -> list:
    """Write the standard label container renderings; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    image_id = meta.get("image_id", "labels")
    written = []
    for name, tint in _TINTS.items():
        if name in arrays:
            written.append(
                _save(render_mask(arrays[name], tint), os.path.join(out_dir, f"{image_id}_{name}.png"))
            )
    if "scale_map" in arrays:
        written.append(
            _save(render_heat(arrays["scale_map"]), os.path.join(out_dir, f"{image_id}_scale_map.png"))
        )
    if "surrounding" in arrays:
        written.append(
            _save(
                render_surrounding_tile(arrays["surrounding"]),
                os.path.join(out_dir, f"{image_id}_surrounding.png"),
            )
        )
    else:
        log.warning("container for %s has no surrounding array; tile skipped", image_id)
    return written


def render_detections(image_path, det_set, out_path, width: int = 3) -> str:
    """Stroke detection polygons over the source image."""
    with Image.open(image_path) as im:
        canvas = im.convert("RGB")
    draw = ImageDraw.Draw(canvas)
    for det in det_set.detections:
        pts = [tuple(p) for p in det.polygon.points]
        draw.line(pts + pts[:1], fill=(255, 40, 40), width=width)
    return _save(canvas, out_path)
