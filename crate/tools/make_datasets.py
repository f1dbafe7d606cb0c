#!/usr/bin/env python3
"""Convert the bundled UCI sources into gzipped sparse `label idx:val` files.

Sources (fetched from PyPI because they ship the raw UCI files):

  mushrooms  wittgenstein==0.3.4 sdist, tests/mushroom.csv (8124 rows, header,
             class first). Every nominal attribute is one-hot encoded over the
             values it actually takes, in the order of the UCI attribute
             documentation. stalk-root carries missing values and is dropped,
             which leaves 112 binary features. Labels: edible=1, poisonous=2.
  spambase   keel-ds==0.2.5 wheel, keel_ds/data/balanced/raw/spambase.dat
             (4597 rows, 57 dense features, class last). Zero entries are
             omitted. Labels: 0=ham, 1=spam.

Usage:
  python3 tools/make_datasets.py --mushroom-csv mushroom.csv \
      --spambase-dat spambase.dat --out-dir data
"""

import argparse
import csv
import gzip
import os

# UCI attribute documentation order (class column excluded).
MUSHROOM_VALUES = [
    ("cap-shape", "bcxfks"),
    ("cap-surface", "fgys"),
    ("cap-color", "nbcgrpuewy"),
    ("bruises", "tf"),
    ("odor", "alcyfmnps"),
    ("gill-attachment", "adfn"),
    ("gill-spacing", "cwd"),
    ("gill-size", "bn"),
    ("gill-color", "knbhgropuewy"),
    ("stalk-shape", "et"),
    ("stalk-root", None),
    ("stalk-surface-above-ring", "fyks"),
    ("stalk-surface-below-ring", "fyks"),
    ("stalk-color-above-ring", "nbcgopewy"),
    ("stalk-color-below-ring", "nbcgopewy"),
    ("veil-type", "pu"),
    ("veil-color", "nowy"),
    ("ring-number", "not"),
    ("ring-type", "ceflnpsz"),
    ("spore-print-color", "knbhrouwy"),
    ("population", "acnsvy"),
    ("habitat", "glmpuwd"),
]


def write_gz(path, lines):
    # mtime=0 keeps the archive byte-stable across regenerations.
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as gz:
            gz.write("".join(line + "\n" for line in lines).encode())


def mushrooms(src, out):
    with open(src, newline="") as f:
        rows = list(csv.reader(f))[1:]
    observed = [set() for _ in MUSHROOM_VALUES]
    for row in rows:
        for j, v in enumerate(row[1:]):
            observed[j].add(v)
    index = {}
    next_idx = 1
    for j, (_, order) in enumerate(MUSHROOM_VALUES):
        if order is None:
            continue
        unknown = observed[j] - set(order)
        assert not unknown, (MUSHROOM_VALUES[j][0], unknown)
        for v in order:
            if v in observed[j]:
                index[(j, v)] = next_idx
                next_idx += 1
    lines = []
    for row in rows:
        label = {"e": "1", "p": "2"}[row[0]]
        feats = sorted(index[(j, v)] for j, v in enumerate(row[1:]) if (j, v) in index)
        lines.append(label + " " + " ".join(f"{i}:1" for i in feats))
    write_gz(out, lines)
    print(f"mushrooms: {len(lines)} rows, {next_idx - 1} features -> {out}")


def spambase(src, out):
    lines = []
    with open(src) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("@"):
                continue
            vals = [t.strip() for t in line.split(",")]
            label = vals[-1]
            feats = []
            for i, tok in enumerate(vals[:-1], start=1):
                if float(tok) != 0.0:
                    feats.append(f"{i}:{tok}")
            lines.append(label + (" " + " ".join(feats) if feats else ""))
    write_gz(out, lines)
    print(f"spambase: {len(lines)} rows -> {out}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mushroom-csv")
    ap.add_argument("--spambase-dat")
    ap.add_argument("--out-dir", default="data")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    if args.mushroom_csv:
        mushrooms(args.mushroom_csv, os.path.join(args.out_dir, "mushrooms.gz"))
    if args.spambase_dat:
        spambase(args.spambase_dat, os.path.join(args.out_dir, "spambase.gz"))


if __name__ == "__main__":
    main()
