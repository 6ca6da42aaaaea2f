"""Row construction and bit-stable CSV/JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .cycle import CycleRecord, EfficiencyPoint, EnantiomerPair
from .lindblad import ThermalizationTrace

SPECTRUM_COLUMNS = ("param", "E1", "E2", "E3")
CYCLE_COLUMNS = ("param", "chirality", "Qh", "Qc", "W", "eta_percent", "regime", "min_gap")
WIDE_CYCLE_COLUMNS = ("param",) + tuple(
    f"{name}_{side}" for side in ("left", "right") for name in ("Qh", "Qc", "W", "eta", "regime", "min_gap")
)
THERMALIZE_COLUMNS = ("t", "epsilon", "fidelity")
EFFICIENCY_COLUMNS = ("phi", "eta_left", "eta_right")


def fmt(x: Any) -> str:
    """12 significant digits, locale independent; ``None`` becomes empty."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"refusing to serialize non-finite value {x!r}")
    if x == 0.0:
        x = 0.0  # drop the sign of negative zero
    return format(x, ".12g")


def _json_value(x: Any) -> Any:
    if x is None or isinstance(x, str):
        return x
    return float(fmt(x))


def spectrum_rows(points: Iterable[tuple]) -> List[Dict[str, Any]]:
    rows = []
    for param, spec in points:
        e1, e2, e3 = spec.values
        rows.append({"param": param, "E1": e1, "E2": e2, "E3": e3})
    return rows


def cycle_row(rec: CycleRecord) -> Dict[str, Any]:
    return {
        "param": rec.param,
        "chirality": rec.chirality.value,
        "Qh": rec.q_hot,
        "Qc": rec.q_cold,
        "W": rec.work,
        "eta_percent": rec.eta_percent,
        "regime": rec.regime.value,
        "min_gap": rec.min_gap,
    }


def pair_rows(pairs: Sequence[EnantiomerPair]) -> List[Dict[str, Any]]:
    return [cycle_row(r) for p in pairs for r in (p.left, p.right)]


def wide_pair_rows(pairs: Sequence[EnantiomerPair]) -> List[Dict[str, Any]]:
    rows = []
    for p in pairs:
        row: Dict[str, Any] = {"param": p.param}
        for side, rec in (("left", p.left), ("right", p.right)):
            row[f"Qh_{side}"] = rec.q_hot
            row[f"Qc_{side}"] = rec.q_cold
            row[f"W_{side}"] = rec.work
            row[f"eta_{side}"] = rec.eta_percent
            row[f"regime_{side}"] = rec.regime.value
            row[f"min_gap_{side}"] = rec.min_gap
        rows.append(row)
    return rows


def thermalize_rows(trace: ThermalizationTrace) -> List[Dict[str, Any]]:
    return [
        {"t": t, "epsilon": e, "fidelity": f}
        for t, e, f in zip(trace.times, trace.epsilon, trace.fidelity)
    ]


def efficiency_rows(points: Sequence[EfficiencyPoint]) -> List[Dict[str, Any]]:
    return [{"phi": p.phi, "eta_left": p.eta_left, "eta_right": p.eta_right} for p in points]


def render_csv(columns: Sequence[str], rows: Sequence[Dict[str, Any]], config: Optional[dict] = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# config=" + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def render_json(
    columns: Sequence[str],
    rows: Sequence[Dict[str, Any]],
    config: Optional[dict] = None,
    warnings: Sequence[str] = (),
) -> str:
    doc = {
        "config": config or {},
        "columns": list(columns),
        "rows": [{c: _json_value(row[c]) for c in columns} for row in rows],
        "warnings": list(warnings),
    }
    return json.dumps(doc, indent=1) + "\n"


def read_csv_config(text: str) -> dict:
    """Recover the provenance config echoed on the first line of a CSV file."""
    first = text.splitlines()[0]
    if not first.startswith("# config="):
        raise ValueError("no echoed config line")
    return json.loads(first[len("# config="):])


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
