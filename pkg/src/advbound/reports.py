"""Structured report documents: stable-key JSON plus CSV sweep tables.

A report document has five top-level keys in fixed order: schema_version,
command (the resolved math-relevant configuration), result, warnings, and
runtime. Only runtime may differ between reruns with identical inputs; the
body, meaning everything else, is byte-stable; report_body_bytes exposes it for
comparison. Documents round-trip losslessly through JSON.
"""

from __future__ import annotations

import csv
import io
import json

from .errors import FormatError
from .estimator import BoundReport, IterationPoint, SweepPoint
from .regions import ErrorRegion

SCHEMA_VERSION = "1"


def region_record(region: ErrorRegion) -> dict:
    return {
        "metric": region.metric.name,
        "epsilon": region.epsilon,
        "spheres": [[int(c), float(r)] for c, r in zip(region.centers, region.radii)],
    }


def point_record(point: IterationPoint) -> dict:
    return {
        "alpha_nu": point.alpha_nu,
        "train_risk": point.train_risk,
        "train_advrisk": point.train_advrisk,
        "test_risk": point.test_risk,
        "test_advrisk": point.test_advrisk,
        "region": region_record(point.region),
    }


def bound_result(report: BoundReport) -> dict:
    return {
        "c_adv": report.c_adv,
        "slope": report.slope,
        "intercept": report.intercept,
        "extrapolated": report.extrapolated,
        "clamped": report.clamped,
        "degenerate": report.degenerate,
        "points": [point_record(p) for p in report.points],
    }


def sweep_result(points: tuple[SweepPoint, ...]) -> dict:
    return {
        "rows": [
            {
                "spheres": p.spheres,
                "train_expansion": p.train_expansion,
                "test_expansion": p.test_expansion,
            }
            for p in points
        ]
    }


def report_document(command: dict, result: dict, warnings, threads: int,
                    seconds: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "result": result,
        "warnings": list(warnings),
        "runtime": {"threads": int(threads), "seconds": float(seconds)},
    }


def to_json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=False) + "\n").encode("utf-8")


def parse_report(data) -> dict:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not a valid report document: {exc}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise FormatError("not a report document: missing schema_version")
    return doc


def report_body_bytes(doc: dict) -> bytes:
    """The report minus its runtime section; byte-stable across reruns."""
    body = {key: value for key, value in doc.items() if key != "runtime"}
    return to_json_bytes(body)


def write_sweep_csv(handle, points) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["spheres", "train_expansion", "test_expansion"])
    for p in points:
        writer.writerow([p.spheres, repr(p.train_expansion), repr(p.test_expansion)])


def sweep_csv_text(points) -> str:
    buffer = io.StringIO()
    write_sweep_csv(buffer, points)
    return buffer.getvalue()
