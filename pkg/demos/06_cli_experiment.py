"""
Running experiments from config files
=====================================

``paucopt run`` executes one config for every listed seed and writes
``trace.csv``, ``metrics.json`` and ``roc.csv`` per seed; ``paucopt
compare`` runs several configs on the same data and merges their traces
into one long-format CSV. This script drives the same entry point
in-process using the configs in ``demos/configs``.
"""

import csv
import json
import tempfile
from pathlib import Path

from paucopt.cli import main

here = Path(__file__).resolve().parent / "configs"
out = Path(tempfile.mkdtemp(prefix="paucopt-demo-"))

main(["run", str(here / "sorr.ini"), "--out", str(out / "sorr")])
metrics = json.loads((out / "sorr" / "seed_0" / "metrics.json").read_text())
print("SoRR loss %.4f -> %.4f" % (metrics["initial"]["normalized_loss"],
                                  metrics["final"]["normalized_loss"]))

main(["compare", str(here / "agd.ini"), str(here / "dca.ini"), "--out", str(out / "cmp")])
with open(out / "cmp" / "compare.csv", newline="") as fh:
    rows = list(csv.DictReader(fh))
print(len(rows), "merged trace rows; columns:", ", ".join(rows[0]))
