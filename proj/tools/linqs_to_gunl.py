#!/usr/bin/env python3
"""Convert a LINQS citation dataset (cora.content, cora.cites) to the gunl text format.

The content file has one line per paper: id, binary word features, class name.
The cites file has `cited citing` pairs of paper ids. Node ids follow the order
of the content file; class names are numbered in sorted order. Citations to
papers missing from the content file are dropped. No splits.txt is written, so
the loader draws a seeded random split.
"""

import argparse
import pathlib
import sys


def convert(content: pathlib.Path, cites: pathlib.Path, out: pathlib.Path) -> None:
    ids: dict[str, int] = {}
    rows: list[list[str]] = []
    names: list[str] = []
    with content.open() as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] in ids:
                sys.exit(f"{content}: duplicate paper id {parts[0]}")
            ids[parts[0]] = len(rows)
            rows.append(parts[1:-1])
            names.append(parts[-1])
    classes = {name: i for i, name in enumerate(sorted(set(names)))}

    edges = []
    dropped = 0
    with cites.open() as f:
        for line in f:
            parts = line.split()
            if len(parts) != 2:
                continue
            if parts[0] not in ids or parts[1] not in ids:
                dropped += 1
                continue
            edges.append((ids[parts[1]], ids[parts[0]]))

    out.mkdir(parents=True, exist_ok=True)
    with (out / "features.txt").open("w") as f:
        for row in rows:
            f.write(" ".join(row) + "\n")
    with (out / "labels.txt").open("w") as f:
        for name in names:
            f.write(f"{classes[name]}\n")
    with (out / "edges.txt").open("w") as f:
        for src, dst in edges:
            f.write(f"{src}\t{dst}\n")
    print(f"{len(rows)} nodes, {len(edges)} citation lines ({dropped} dropped), {len(classes)} classes")
    for name, i in classes.items():
        print(f"  {i} {name}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("content", type=pathlib.Path)
    parser.add_argument("cites", type=pathlib.Path)
    parser.add_argument("out", type=pathlib.Path)
    args = parser.parse_args()
    convert(args.content, args.cites, args.out)


if __name__ == "__main__":
    main()
