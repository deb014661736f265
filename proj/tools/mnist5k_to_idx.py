#!/usr/bin/env python3
"""Convert mlxtend's bundled 5000-sample MNIST CSV into IDX files.

Writes train-/t10k-{images-idx3,labels-idx1}-ubyte plus checksums.sha256
into the output directory. The split is stratified: per class, the first
`--test-per-class` samples (in a seeded shuffle) go to the test set.

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/mnist5k_to_idx.py /tmp/mlx/mlxtend-*.whl data/mnist
"""

import argparse
import gzip
import hashlib
import io
import random
import struct
import zipfile
from pathlib import Path

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(source: Path):
    if source.suffix == ".whl":
        with zipfile.ZipFile(source) as z:
            raw = z.read(CSV_MEMBER)
    else:
        raw = source.read_bytes()
    text = gzip.decompress(raw).decode()
    rows = []
    for line in text.splitlines():
        values = [int(float(v)) for v in line.split(",")]
        rows.append((bytes(values[:-1]), values[-1]))
    return rows


def write_idx(out: Path, stem: str, rows):
    images = io.BytesIO()
    images.write(struct.pack(">IIII", 2051, len(rows), 28, 28))
    labels = io.BytesIO()
    labels.write(struct.pack(">II", 2049, len(rows)))
    for pixels, label in rows:
        assert len(pixels) == 784
        images.write(pixels)
        labels.write(bytes([label]))
    (out / f"{stem}-images-idx3-ubyte").write_bytes(images.getvalue())
    (out / f"{stem}-labels-idx1-ubyte").write_bytes(labels.getvalue())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", type=Path, help="mlxtend wheel or mnist_5k.csv.gz")
    ap.add_argument("out", type=Path)
    ap.add_argument("--test-per-class", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = read_rows(args.source)
    by_class = {c: [r for r in rows if r[1] == c] for c in range(10)}
    rng = random.Random(args.seed)
    train, test = [], []
    for c in range(10):
        group = by_class[c]
        rng.shuffle(group)
        test += group[: args.test_per_class]
        train += group[args.test_per_class :]
    rng.shuffle(train)
    rng.shuffle(test)

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out, "train", train)
    write_idx(args.out, "t10k", test)
    lines = []
    for name in sorted(p.name for p in args.out.iterdir() if p.name.endswith("-ubyte")):
        digest = hashlib.sha256((args.out / name).read_bytes()).hexdigest()
        lines.append(f"{digest}  {name}\n")
    (args.out / "checksums.sha256").write_text("".join(lines))
    print(f"wrote {len(train)} train / {len(test)} test images to {args.out}")


if __name__ == "__main__":
    main()
