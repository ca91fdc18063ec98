#!/usr/bin/env python3
"""Write dataset files in the layout the asyt CLI expects under ASYT_DATA_DIR.

  mnist/    train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-*   (copied)
  fashion/  same four IDX files, built from per-class JSON pixel arrays
  iris.csv  copied from the repository

No network access: every source is a local path.
"""

import argparse
import json
import os
import shutil
import struct
import sys
from pathlib import Path

IDX_NAMES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
             "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def fashion_from_json(src, dst, train_per_class, test_per_class):
    train, test = [], []
    for label in range(10):
        # Some class files carry empty separator rows; they are not samples.
        rows = [r for r in json.loads((src / f"{label}.json").read_text())["data"] if r]
        if len(rows) < train_per_class + test_per_class:
            sys.exit(f"{src}/{label}.json: only {len(rows)} samples")
        for row in rows[:train_per_class + test_per_class]:
            if len(row) != 784 or any(not 0 <= v <= 255 for v in row):
                sys.exit(f"{src}/{label}.json: malformed sample")
        train += [(row, label) for row in rows[:train_per_class]]
        test += [(row, label) for row in rows[train_per_class:train_per_class + test_per_class]]
    dst.mkdir(parents=True, exist_ok=True)
    for prefix, part in (("train", train), ("t10k", test)):
        write_idx_images(dst / f"{prefix}-images-idx3-ubyte", [r for r, _ in part])
        write_idx_labels(dst / f"{prefix}-labels-idx1-ubyte", [y for _, y in part])
    print(f"fashion: {len(train)} train, {len(test)} test -> {dst}")


def copy_idx(src, dst):
    dst.mkdir(parents=True, exist_ok=True)
    for name in IDX_NAMES:
        if not (src / name).exists():
            sys.exit(f"missing {src / name}")
        if (src / name).resolve() != (dst / name).resolve():
            shutil.copyfile(src / name, dst / name)
    print(f"idx: {src} -> {dst}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=os.environ.get("ASYT_DATA_DIR", "/root/data"))
    ap.add_argument("--mnist", help="directory with the four MNIST IDX files")
    ap.add_argument("--kmnist", help="directory with the four KMNIST IDX files")
    ap.add_argument("--fashion-json", help="directory with 0.json .. 9.json ({'data': [[784 bytes], ...]})")
    ap.add_argument("--train-per-class", type=int, default=6000)
    ap.add_argument("--test-per-class", type=int, default=1000)
    args = ap.parse_args()

    out = Path(args.out)
    if args.mnist:
        copy_idx(Path(args.mnist), out / "mnist")
    if args.kmnist:
        copy_idx(Path(args.kmnist), out / "kmnist")
    if args.fashion_json:
        fashion_from_json(Path(args.fashion_json), out / "fashion",
                          args.train_per_class, args.test_per_class)
    iris = Path(__file__).resolve().parent.parent / "data" / "iris.csv"
    if iris.exists():
        out.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(iris, out / "iris.csv")
        print(f"iris: -> {out / 'iris.csv'}")


if __name__ == "__main__":
    main()
