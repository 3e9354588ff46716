"""Rebuild data/mnist/*.gz from the 10,000 digits bundled in the npm `mnist` package.

Usage: npm pack mnist && tar xzf mnist-*.tgz && python3 scripts/mnist_from_npm.py package/src/digits

Pixels in the package are k/255 rounded to three decimals, so the original
byte is recovered exactly with round(v * 255). Samples are shuffled with a
fixed seed and split 8,000 / 2,000 into the train and t10k file pairs.
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def main(src, out="data/mnist"):
    samples = []
    for digit in range(10):
        flat = json.load(open(Path(src) / f"{digit}.json"))["data"]
        for i in range(0, len(flat), 784):
            px = bytes(round(v * 255) for v in flat[i : i + 784])
            samples.append((px, digit))
    random.Random(20190715).shuffle(samples)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", samples[:8000]), ("t10k", samples[8000:])):
        n = len(part)
        with gzip.GzipFile(out / f"{name}-images-idx3-ubyte.gz", "wb", mtime=0) as f:
            f.write(struct.pack(">IIII", 0x803, n, 28, 28))
            for px, _ in part:
                f.write(px)
        with gzip.GzipFile(out / f"{name}-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
            f.write(struct.pack(">II", 0x801, n))
            f.write(bytes(d for _, d in part))


if __name__ == "__main__":
    main(*sys.argv[1:])
