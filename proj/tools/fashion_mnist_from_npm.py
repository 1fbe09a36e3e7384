#!/usr/bin/env python3
"""Build Fashion-MNIST IDX files from the `fashion-mnist` npm package.

The npm package ships the 70k images grouped per class as JSON arrays of
784 raw bytes, without the original train/test split. This script rebuilds
a 60k/10k split deterministically: the first 6000 images of each class go to
the training set, the remainder to the test set, and both sets are
interleaved with a fixed-seed shuffle.

Usage:
    npm pack fashion-mnist && tar xzf fashion-mnist-*.tgz
    python3 tools/fashion_mnist_from_npm.py package/src/clothes $ARTURO_DATA_ROOT/fashion-mnist
"""

import argparse
import json
import random
import struct
from pathlib import Path

TRAIN_PER_CLASS = 6000
SHUFFLE_SEED = 20240101


def write_images(path: Path, images):
    with path.open("wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path: Path, labels):
    with path.open("wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("clothes_dir", type=Path)
    parser.add_argument("out_dir", type=Path)
    args = parser.parse_args()

    train, test = [], []
    for label in range(10):
        data = json.loads((args.clothes_dir / f"{label}.json").read_text())["data"]
        # class 0 carries two empty placeholder entries
        data = [img for img in data if img]
        for i, img in enumerate(data):
            if len(img) != 784 or any(not 0 <= p <= 255 for p in img):
                raise SystemExit(f"class {label} sample {i}: malformed image")
            (train if i < TRAIN_PER_CLASS else test).append((img, label))

    rng = random.Random(SHUFFLE_SEED)
    rng.shuffle(train)
    rng.shuffle(test)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train", train), ("t10k", test)):
        write_images(args.out_dir / f"{name}-images-idx3-ubyte", [r[0] for r in rows])
        write_labels(args.out_dir / f"{name}-labels-idx1-ubyte", [r[1] for r in rows])
        print(f"{name}: {len(rows)} samples")


if __name__ == "__main__":
    main()
