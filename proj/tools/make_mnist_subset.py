#!/usr/bin/env python3
# Copyright 2026 The DirDP Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the 5000-image MNIST sample shipped with mlxtend into IDX files.

The CSV has one row per image: 784 pixel values (0-255) followed by the
label. Rows are grouped by label, so they are shuffled with a fixed seed
before being split into train and test files.

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist5k
"""

import argparse
import gzip
import io
import pathlib
import random
import struct
import zipfile

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(source: pathlib.Path):
    if source.suffix == ".whl":
        with zipfile.ZipFile(source) as wheel:
            raw = wheel.read(CSV_MEMBER)
    else:
        raw = source.read_bytes()
    text = gzip.decompress(raw).decode("ascii")
    rows = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        values = [int(float(v)) for v in line.split(",")]
        rows.append((bytes(values[:784]), values[784]))
    return rows


def write_idx(prefix: pathlib.Path, rows):
    images = bytearray(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 0x00000801, len(rows)))
    for pixels, label in rows:
        images += pixels
        labels.append(label)
    # mtime=0 keeps the archives byte-reproducible.
    with open(f"{prefix}-images-idx3-ubyte.gz", "wb") as f:
        f.write(gzip.compress(bytes(images), mtime=0))
    with open(f"{prefix}-labels-idx1-ubyte.gz", "wb") as f:
        f.write(gzip.compress(bytes(labels), mtime=0))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("source", type=pathlib.Path,
                        help="mlxtend wheel or mnist_5k.csv.gz")
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--n-test", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20230101)
    args = parser.parse_args()

    rows = read_rows(args.source)
    random.Random(args.seed).shuffle(rows)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(args.out_dir / "train", rows[args.n_test:])
    write_idx(args.out_dir / "t10k", rows[:args.n_test])
    print(f"wrote {len(rows) - args.n_test} train / {args.n_test} test images")


if __name__ == "__main__":
    main()
