#!/usr/bin/env python3
"""Write iris.csv, wine.csv and crabs.csv into a data directory.

iris and wine come from the copies bundled with scikit-learn. crabs (the
Leptograpsus crabs data from the R package MASS) is read from a local CSV
if --crabs-csv is given, otherwise from the pydataset source distribution
fetched with pip, otherwise from the Rdatasets mirror.

Every output has the numeric feature columns followed by a "class" column.
"""

import argparse
import csv
import io
import subprocess
import sys
import tarfile
import tempfile
import urllib.request
from pathlib import Path

RDATASETS_URL = "https://vincentarelbundock.github.io/Rdatasets/csv/MASS/crabs.csv"
CRAB_FEATURES = ["FL", "RW", "CL", "CW", "BD"]


def write_table(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def sklearn_dataset(loader, path):
    bunch = loader()
    names = [n.replace(" ", "_").replace("(", "").replace(")", "").replace("/", "_")
             for n in bunch.feature_names]
    rows = [[repr(float(v)) for v in x] + [bunch.target_names[t]]
            for x, t in zip(bunch.data, bunch.target)]
    write_table(path, names + ["class"], rows)


def crabs_from_pydataset():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "pydataset==0.2.0", "--no-deps",
                        "--no-binary", ":all:", "-d", tmp, "-q"], check=True)
        sdist = next(Path(tmp).glob("pydataset-*.tar.gz"))
        with tarfile.open(sdist) as outer:
            member = next(m for m in outer.getmembers() if m.name.endswith("resources.tar.gz"))
            inner_bytes = outer.extractfile(member).read()
        with tarfile.open(fileobj=io.BytesIO(inner_bytes)) as inner:
            member = inner.getmember("resources/rdata/csv/MASS/crabs.csv")
            return inner.extractfile(member).read().decode()


def crabs_text(local):
    if local:
        return Path(local).read_text()
    try:
        return crabs_from_pydataset()
    except Exception as e:  # noqa: BLE001
        print(f"pydataset route failed ({e}); trying {RDATASETS_URL}", file=sys.stderr)
    with urllib.request.urlopen(RDATASETS_URL, timeout=30) as r:
        return r.read().decode()


def write_crabs(path, text):
    reader = csv.DictReader(io.StringIO(text))
    rows = [[r[c] for c in CRAB_FEATURES] + [r["sp"] + r["sex"]] for r in reader]
    if len(rows) != 200:
        raise SystemExit(f"crabs: expected 200 rows, found {len(rows)}")
    write_table(path, CRAB_FEATURES + ["class"], rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--crabs-csv", help="MASS crabs CSV with sp, sex, FL, RW, CL, CW, BD columns")
    args = ap.parse_args()

    from sklearn.datasets import load_iris, load_wine

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sklearn_dataset(load_iris, out / "iris.csv")
    sklearn_dataset(load_wine, out / "wine.csv")
    write_crabs(out / "crabs.csv", crabs_text(args.crabs_csv))


if __name__ == "__main__":
    main()
