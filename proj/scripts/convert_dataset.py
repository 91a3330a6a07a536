#!/usr/bin/env python3
"""Convert a flat annotation export into the shroud eval JSONL schema (docs/dataset.md).

Expected input: a CSV with one row per annotated object and the columns

    image_id      name shared by all objects of one image
    image_path    path to the image file
    label         object name
    sensitive     1/0, true/false or yes/no
    category      0..5 in the upstream scheme
    severity      1..7 Likert score
    intent        optional, taken from the first row of the image
    concern       optional, taken from the first row of the image

Upstream releases that nest annotations per annotator should be flattened first; pick one
annotator per object or aggregate (e.g. majority category, median severity) before running this.
"""

import argparse
import csv
import json
import sys
from collections import OrderedDict

TRUE = {"1", "true", "yes", "y"}
FALSE = {"0", "false", "no", "n"}


def parse_bool(text, where):
    t = text.strip().lower()
    if t in TRUE:
        return True
    if t in FALSE:
        return False
    raise ValueError(f"{where}: sensitive must be boolean, got {text!r}")


def parse_int(text, lo, hi, name, where):
    v = int(text)
    if not lo <= v <= hi:
        raise ValueError(f"{where}: {name} {v} outside {lo}..{hi}")
    return v


def convert(rows):
    cases = OrderedDict()
    for n, row in enumerate(rows, start=2):
        where = f"row {n}"
        key = row["image_id"]
        case = cases.get(key)
        if case is None:
            case = {"id": key, "image": row["image_path"], "objects": []}
            for opt in ("intent", "concern"):
                if row.get(opt):
                    case[opt] = row[opt]
            cases[key] = case
        case["objects"].append({
            "label": row["label"].strip(),
            "sensitive": parse_bool(row["sensitive"], where),
            "category": parse_int(row["category"], 0, 5, "category", where),
            "severity": parse_int(row["severity"], 1, 7, "severity", where),
        })
    return list(cases.values())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", help="output JSONL (default stdout)")
    args = ap.parse_args()
    with open(args.csv, newline="", encoding="utf-8") as f:
        cases = convert(csv.DictReader(f))
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    for c in cases:
        out.write(json.dumps(c) + "\n")
    if args.out:
        out.close()
    print(f"{len(cases)} cases", file=sys.stderr)


if __name__ == "__main__":
    main()
