"""Lossless text renderings: rationals, matrices, tables, trajectories.

Rationals print as ``p/q`` (or a bare integer) and parse back exactly;
reals print with 17 significant digits so a float round-trips bit-exactly.
Tables and matrices render to CSV or plain JSON-ready structures; both the
service layer and the command-line client share these helpers.
"""
from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Mapping, Sequence

from .lattice import format_partition
from .rates import RateSystem


def frac_str(value: Fraction | int) -> str:
    f = Fraction(value)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def real_str(value: float) -> str:
    return f"{float(value):.17g}"


def rows_to_csv(fieldnames: Sequence[str], rows: Sequence[Mapping[str, object]]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in fieldnames})
    return out.getvalue()


def matrix_payload(labels: Sequence[str], matrix: Sequence[Sequence[Fraction]]) -> dict:
    """A labeled exact matrix as JSON-ready data (entries as ``p/q``)."""
    return {
        "labels": list(labels),
        "rows": [[frac_str(v) for v in row] for row in matrix],
    }


def matrix_csv(payload: Mapping[str, object]) -> str:
    labels = payload["labels"]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["partition", *labels])
    for label, row in zip(labels, payload["rows"]):
        writer.writerow([label, *row])
    return out.getvalue()


def rates_table_rows(rs: RateSystem) -> list[dict[str, str]]:
    """Per-subsystem rate table: marginal rate, decay rates, and their gap.

    One row per (site subset, partition of that subset), covering every
    nonempty subset of sites.  All entries are exact rationals.
    """
    rows: list[dict[str, str]] = []
    for subset in rs.subsets():
        marginal = rs.marginal_rates(subset)
        label = "{" + ",".join(str(s) for s in subset) + "}"
        for p in rs.sublattice(subset).elements:
            psi = rs.psi(p)
            chi = rs.chi(p)
            rows.append({
                "subsystem": label,
                "partition": format_partition(p),
                "rho": frac_str(marginal.get(p, Fraction(0))),
                "psi": frac_str(psi),
                "chi": frac_str(chi),
                "psi_minus_chi": frac_str(psi - chi),
            })
    return rows


def trajectory_payload(record) -> dict:
    """JSON-ready trajectory: times, labeled rows, and metadata."""
    out: dict = {
        "times": [float(t) for t in record.times],
        "rows": [[float(v) for v in row] for row in record.values],
        "metadata": dict(record.metadata),
    }
    if record.columns is not None:
        out["columns"] = list(record.columns)
    if record.shape is not None:
        out["shape"] = list(record.shape)
    return out


def trajectory_csv(times: Sequence[float], columns: Sequence[str],
                   rows: Sequence[Sequence[float]]) -> str:
    """CSV trajectory: a time column plus one column per partition."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", *columns])
    for t, row in zip(times, rows):
        writer.writerow([real_str(t), *(real_str(v) for v in row)])
    return out.getvalue()
