"""CSV / JSON output of sweep results."""

import csv
import io
import json
import sys
from dataclasses import asdict

CSV_COLUMNS = ("algorithm", "sweep_db", "mean_sum_secrecy", "stderr", "feasible_frac",
               "mean_relay_power", "trials", "seed")


def to_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow([r.algorithm] + [repr(getattr(r, c)) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def to_json(result):
    doc = {
        "config": result.config.to_dict(),
        "metadata": result.metadata,
        "results": [asdict(r) for r in result.rows],
        "failures": [list(f) for f in result.failures],
    }
    return json.dumps(doc, indent=1)


def emit(result, fmt="csv", path=None):
    """Write ``result`` as ``fmt`` to ``path`` (stdout when ``None``); returns the text."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
