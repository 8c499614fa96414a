"""Serialisation of metric fields and curvature reports.

A metric is stored as a JSON header describing the chart plus a CSV with
one row per sample: the coordinates followed by the upper-triangular
metric entries ``g_ij`` (``i <= j``).
"""

import csv
import json
from pathlib import Path

import numpy as np

from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.metric import MetricField

__all__ = ["save_metric", "load_metric", "write_json", "write_csv", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


def _fmt(x):
    return FLOAT_FMT % x


def write_csv(path, header, columns):
    """Write equal-length numeric columns with a header row.

    Floats are written with 17 significant digits so that identical
    inputs give byte-identical files.
    """
    path = Path(path)
    cols = [np.asarray(c).ravel() for c in columns]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def write_json(path, payload):
    """Write a schema-versioned JSON document with sorted keys."""
    data = {"schema_version": SCHEMA_VERSION}
    data.update(_clean(payload))
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def save_metric(metric, stem):
    """Write ``<stem>.json`` (chart header) and ``<stem>.csv`` (samples).

    Returns
    -------
    tuple of Path
    """
    stem = Path(stem)
    ch = metric.chart
    n = ch.dim
    iu = np.triu_indices(n)
    header = list(ch.labels) + [f"g{i}{j}" for i, j in zip(*iu)]
    coords = [c.ravel() for c in ch.mesh()]
    comps = [metric.g[..., i, j].ravel() for i, j in zip(*iu)]
    csv_path = write_csv(stem.with_suffix(".csv"), header, coords + comps)
    json_path = write_json(stem.with_suffix(".json"), {"name": metric.name, "chart": ch.to_dict()})
    return json_path, csv_path


def load_metric(stem):
    """Inverse of :func:`save_metric`."""
    stem = Path(stem)
    head = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    chart = GridChart.from_dict(head["chart"])
    data = np.loadtxt(stem.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    n = chart.dim
    iu = np.triu_indices(n)
    g = np.zeros(tuple(chart.shape) + (n, n))
    for k, (i, j) in enumerate(zip(*iu)):
        col = data[:, n + k].reshape(chart.shape)
        g[..., i, j] = col
        g[..., j, i] = col
    return MetricField(chart, g, name=head.get("name", "metric"))
