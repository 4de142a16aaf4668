"""CSV and JSON formats: curve tables, cluster models, forecasts and power vectors.

Every writer goes through :func:`atomic_write`, which writes to a temporary
file next to the target and renames it into place.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cluster import ClusterModel
from .curves import HOURS, LoadCurve, validate_curve
from .errors import LoadShapeError
from .pld import PowerVector

HOUR_COLUMNS = [f"h{h:02d}" for h in range(HOURS)]
CURVE_HEADER = ["household_id", "date", *HOUR_COLUMNS]
MODEL_FORMAT = "loadshape.cluster-model/1"


class FormatError(LoadShapeError):
    """An input file does not follow the expected layout."""


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(value: float) -> str:
    return repr(float(value))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def parse_curves_csv(text: str) -> list[LoadCurve]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != CURVE_HEADER:
        raise FormatError(f"curve CSV must start with the header {','.join(CURVE_HEADER)}")
    curves = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CURVE_HEADER):
            raise FormatError(f"line {lineno}: expected {len(CURVE_HEADER)} columns, got {len(row)}")
        try:
            date = dt.date.fromisoformat(row[1].strip())
            values = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        try:
            curves.append(validate_curve(values, row[0].strip(), date))
        except LoadShapeError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
    return curves


def read_curves(path: str | Path) -> list[LoadCurve]:
    """Read a ``household_id,date,h00..h23`` table; day types follow from dates."""
    return parse_curves_csv(Path(path).read_text())


def curves_text(curves: Iterable[LoadCurve]) -> str:
    return csv_text(CURVE_HEADER, ([c.household_id, c.date.isoformat(), *map(float, c.values)]
                                   for c in curves))


def write_curves(path: str | Path, curves: Iterable[LoadCurve]) -> None:
    atomic_write(path, curves_text(curves))


def write_rows(path: str | Path | None, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    text = csv_text(header, rows)
    if path is not None:
        atomic_write(path, text)
    return text


def json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc) -> None:
    atomic_write(path, json_text(doc))


def model_to_dict(models: Sequence[ClusterModel], quality=None) -> dict:
    """Serialize the per-period models of one clustering run.

    ``quality`` optionally maps period -> QualityReport.
    """
    first = models[0]
    periods = []
    for m in models:
        entry = {
            "period": m.period,
            "prototypes": [[float(v) for v in row] for row in m.prototypes],
            "assignments": {cid: int(lab) for cid, lab in zip(m.curve_ids, m.labels)},
        }
        if m.medoids is not None:
            entry["medoids"] = m.medoids
        if quality is not None and m.period in quality:
            q = quality[m.period]
            entry.update(WC=q.wc, WB=q.wb, WCBCR=q.wcbcr)
        periods.append(entry)
    return {
        "format": MODEL_FORMAT,
        "metric": first.metric,
        "K": first.k,
        "n_p": first.n_periods,
        "seed": first.seed,
        "periods": periods,
    }


def model_from_dict(doc: dict) -> list[ClusterModel]:
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a cluster model document (format != {MODEL_FORMAT})")
    out = []
    for entry in sorted(doc["periods"], key=lambda e: e["period"]):
        ids = list(entry["assignments"])
        out.append(ClusterModel(
            metric=doc["metric"],
            k=int(doc["K"]),
            prototypes=np.asarray(entry["prototypes"], dtype=float),
            labels=np.asarray([entry["assignments"][i] for i in ids], dtype=int),
            curve_ids=ids,
            period=int(entry["period"]),
            n_periods=int(doc["n_p"]),
            seed=doc.get("seed"),
            medoids=entry.get("medoids"),
        ))
    if len(out) != int(doc["n_p"]):
        raise FormatError("model document has the wrong number of periods")
    return out


def read_model(path: str | Path) -> list[ClusterModel]:
    return model_from_dict(json.loads(Path(path).read_text()))


def read_power(path: str | Path, alpha: float = 1.0) -> tuple[PowerVector, list[str]]:
    """Read power levels from JSON: a plain list, or ``{"power": [...], "names": [...]}``."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        power = doc.get("power", doc.get("p"))
        names = doc.get("names")
    else:
        power, names = doc, None
    if power is None:
        raise FormatError("power file needs a 'power' list")
    names = list(names) if names else [f"p{j + 1}" for j in range(len(power))]
    if len(names) != len(power):
        raise FormatError("power names and levels differ in length")
    return PowerVector(np.asarray(power, dtype=float), alpha), names
