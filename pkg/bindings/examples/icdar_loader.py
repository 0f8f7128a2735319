"""Example data loader: walk an ICDAR2015-format folder and yield
(image path, label arrays) pairs ready for a training pipeline.

Usage:
    python icdar_loader.py --images /data/ic15/imgs --gts /data/ic15/gts
"""

import argparse
import os

from fepe.ingest import AnnotationFormat, PairingRule, load_dataset
from fepe_bindings import py_gen_labelset


def iter_samples(images_dir, gts_dir, delta=0.4, a_min=16.0, mu=5):
    pairing = PairingRule()
    for img in load_dataset(gts_dir, AnnotationFormat.ICDAR15, images_dir=images_dir):
        labels = py_gen_labelset(
            [inst.polygon.points for inst in img.instances],
            [inst.ignore for inst in img.instances],
            img.height,
            img.width,
            delta=delta,
            a_min=a_min,
            mu=mu,
            image_id=img.image_id,
        )
        for ext in pairing.image_exts:
            path = os.path.join(images_dir, img.image_id + ext)
            if os.path.exists(path):
                yield path, labels.as_dict()
                break


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--images", required=True)
    parser.add_argument("--gts", required=True)
    parser.add_argument("--limit", type=int, default=5)
    args = parser.parse_args()
    for i, (path, arrays) in enumerate(iter_samples(args.images, args.gts)):
        if i >= args.limit:
            break
        shapes = {k: f"{v.dtype}{list(v.shape)}" for k, v in arrays.items()}
        print(f"{path}: {shapes}")


if __name__ == "__main__":
    main()
