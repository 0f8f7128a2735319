"""On-disk label container: one directory per image holding meta.json and
raw row-major little-endian arrays named <name>.<dtype>."""

import json
import os

import numpy as np

from .errors import InputError, IoError
from .labelgen import LabelSet

_DTYPES = {"u8": "<u1", "u16": "<u2", "f32": "<f4"}
_SUFFIX = {"u8": "u8", "u16": "u16", "f32": "f32"}

ARRAY_ORDER = (
    ("text_map", "u8"),
    ("kernel_map", "u8"),
    ("ignore_mask", "u8"),
    ("scale_map", "f32"),
    ("surrounding", "u16"),
)


def write_labelset(out_dir, image_id: str, labels: LabelSet, meta: dict) -> str:
    """Write one label container; returns its directory path."""
    arrays = {
        "text_map": labels.text_map.astype("<u1"),
        "kernel_map": labels.kernel_map.astype("<u1"),
        "ignore_mask": labels.ignore_mask.astype("<u1"),
        "scale_map": labels.scale_map.astype("<f4"),
        "surrounding": labels.surrounding_maps.astype("<u2"),
    }
    h, w = labels.text_map.shape
    meta_out = {
        "height": int(h),
        "width": int(w),
        "image_id": image_id,
        **meta,
        "arrays": [
            {"name": name, "dtype": dtype, "shape": list(arrays[name].shape)}
            for name, dtype in ARRAY_ORDER
        ],
    }
    return write_container(out_dir, image_id, arrays, meta_out)


def write_container(out_dir, image_id: str, arrays: dict, meta: dict) -> str:
    cdir = os.path.join(out_dir, image_id)
    os.makedirs(cdir, exist_ok=True)
    if "arrays" not in meta:
        meta = {
            **meta,
            "arrays": [
                {"name": name, "dtype": _suffix_for(arr.dtype), "shape": list(arr.shape)}
                for name, arr in arrays.items()
            ],
        }
    for spec in meta["arrays"]:
        name = spec["name"]
        arr = np.ascontiguousarray(arrays[name].astype(_DTYPES[spec["dtype"]]))
        arr.tofile(os.path.join(cdir, f"{name}.{_SUFFIX[spec['dtype']]}"))
    with open(os.path.join(cdir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return cdir


def _suffix_for(dtype) -> str:
    dt = np.dtype(dtype)
    for suffix, np_name in _DTYPES.items():
        if dt == np.dtype(np_name):
            return suffix
    raise InputError(f"unsupported container dtype {dt}")


def read_container(cdir):
    """Load meta.json plus every listed array; returns (meta, arrays)."""
    meta_path = os.path.join(cdir, "meta.json")
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {meta_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed meta.json in {cdir}: {exc}") from exc
    arrays = {}
    for spec in meta.get("arrays", []):
        name, dtype = spec["name"], spec["dtype"]
        if dtype not in _DTYPES:
            raise InputError(f"{cdir}: unknown dtype {dtype!r} for array {name!r}")
        path = os.path.join(cdir, f"{name}.{_SUFFIX[dtype]}")
        try:
            flat = np.fromfile(path, dtype=_DTYPES[dtype])
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        shape = tuple(int(v) for v in spec["shape"])
        if flat.size != int(np.prod(shape)):
            raise InputError(
                f"{path}: expected {int(np.prod(shape))} elements for shape {shape}, got {flat.size}"
            )
        arrays[name] = flat.reshape(shape)
    return meta, arrays


def list_containers(root):
    """Container subdirectories of root (those holding a meta.json), sorted."""
    if not os.path.isdir(root):
        raise IoError(f"container directory not found: {root}")
    out = []
    for name in sorted(os.listdir(root)):
        cdir = os.path.join(root, name)
        if os.path.isdir(cdir) and os.path.exists(os.path.join(cdir, "meta.json")):
            out.append(cdir)
    return out


def score_map_from_container(cdir):
    """Probability raster for reconstruction: a float score_map array when
    present, else a binary kernel_map interpreted as probabilities."""
    meta, arrays = read_container(cdir)
    if "score_map" in arrays:
        return meta, arrays["score_map"].astype(np.float64)
    if "kernel_map" in arrays:
        return meta, arrays["kernel_map"].astype(np.float64)
    raise InputError(f"{cdir}: container holds neither score_map nor kernel_map")
