"""Convert a CSV of MNIST digits (784 pixel columns then the label, 0-255)
into shuffled IDX train/test files.

usage: mnist_csv_to_idx.py SRC.csv[.gz] OUT_DIR [--train 4000] [--seed 0]
"""
import argparse
import gzip
import struct
from pathlib import Path

import numpy as np


def write_images(path, pixels):
    n = pixels.shape[0]
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(pixels.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("src")
    ap.add_argument("out")
    ap.add_argument("--train", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    opener = gzip.open if args.src.endswith(".gz") else open
    with opener(args.src, "rt") as f:
        table = np.loadtxt(f, delimiter=",", dtype=np.int64)
    pixels, labels = table[:, :784], table[:, 784]
    assert pixels.min() >= 0 and pixels.max() <= 255

    order = np.random.default_rng(args.seed).permutation(len(labels))
    pixels, labels = pixels[order], labels[order]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = args.train
    write_images(out / "train-images-idx3-ubyte", pixels[:t])
    write_labels(out / "train-labels-idx1-ubyte", labels[:t])
    write_images(out / "test-images-idx3-ubyte", pixels[t:])
    write_labels(out / "test-labels-idx1-ubyte", labels[t:])


if __name__ == "__main__":
    main()
