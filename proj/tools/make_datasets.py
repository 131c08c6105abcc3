#!/usr/bin/env python3
"""Regenerate data/dna.libsvm and data/pendigits.libsvm from the KEEL archives.

The KEEL repository ships the UCI splice-junction and pen-based digit
collections. `pip download keel_ds` fetches them; this script converts
them into LIBSVM text files.

DNA: each of the 60 nucleotides becomes three binary indicators
(A=100, C=010, G=001, T=000); rows with ambiguity codes are dropped.
Labels: 1=EI, 2=IE, 3=N. A seeded 2000-row subset is kept, matching the
size of the usual LIBSVM `dna` training file.
"""

import argparse
import random
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

ENCODING = {"A": (1, 0, 0), "C": (0, 1, 0), "G": (0, 0, 1), "T": (0, 0, 0)}
DNA_LABELS = {"EI": 1, "IE": 2, "N": 3}


def keel_rows(wheel: Path, name: str):
    with zipfile.ZipFile(wheel) as z:
        text = z.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    for line in text.splitlines():
        if line.startswith("@") or not line.strip():
            continue
        yield [tok.strip() for tok in line.split(",")]


def libsvm_line(label, values):
    feats = [f"{i + 1}:{v:g}" for i, v in enumerate(values) if v != 0]
    return " ".join([str(label)] + feats)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--wheel", help="path to a keel_ds wheel; downloaded when omitted")
    ap.add_argument("--dna-size", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    wheel = Path(args.wheel) if args.wheel else None
    if wheel is None:
        tmp = Path(tempfile.mkdtemp())
        subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                               "-d", str(tmp), "keel_ds==0.2.5"])
        wheel = next(tmp.glob("keel_ds-*.whl"))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    dna = []
    for row in keel_rows(wheel, "splice"):
        seq, label = row[:60], row[60]
        if any(s not in ENCODING for s in seq):
            continue
        bits = [b for s in seq for b in ENCODING[s]]
        dna.append(libsvm_line(DNA_LABELS[label], bits))
    rng = random.Random(args.seed)
    keep = sorted(rng.sample(range(len(dna)), args.dna_size))
    (out / "dna.libsvm").write_text("\n".join(dna[i] for i in keep) + "\n")

    pen = []
    for row in keel_rows(wheel, "penbased"):
        values = [float(v) for v in row[:16]]
        pen.append(libsvm_line(int(row[16]), values))
    (out / "pendigits.libsvm").write_text("\n".join(pen) + "\n")
    print(f"dna: {len(keep)} of {len(dna)} rows, pendigits: {len(pen)} rows")


if __name__ == "__main__":
    main()
