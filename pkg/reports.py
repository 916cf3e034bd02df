"""Report emission: CSV / JSON / XLSX envelopes and density-matrix files.

Floats are written with Python's shortest round-trip repr, so reading a file back
reproduces the values exactly. Files are written to a temporary sibling and renamed
into place.
"""
import json
import logging
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from dynamics.quantum import project_density
from errors import ConfigError
from models import DensityMatrix, ReportEnvelope
from units import energy_scale

logger = logging.getLogger(__name__)

TOOL_NAME = "dtmech"
TOOL_VERSION = "0.1.0"
FORMATS = ("csv", "json", "xlsx")


def build_meta(run_config) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": run_config.echo(),
        "seed": run_config.seed,
    }


def _plain(value):
    """JSON-safe copy; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, pd.DataFrame):
        return {col: _plain(value[col].tolist()) for col in value.columns}
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def frame_csv(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, lineterminator="\n")


def atomic_write(path: str, payload: str | bytes) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(payload, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _as_frame(data) -> pd.DataFrame:
    if isinstance(data, pd.DataFrame):
        return data
    if isinstance(data, dict):
        # 1-D entries become columns; scalars only form a row when nothing else does
        columns = {k: v for k, v in data.items() if np.ndim(v) == 1}
        if columns:
            return pd.DataFrame(columns)
        return pd.DataFrame([{k: _plain(v) for k, v in data.items() if np.ndim(v) == 0}])
    raise ValueError(f"Cannot tabulate a payload of type {type(data).__name__}.")


def _xlsx_bytes(envelope: ReportEnvelope) -> bytes:
    from io import BytesIO

    from openpyxl import Workbook
    from openpyxl.utils import get_column_letter

    wb = Workbook()

    ws1 = wb.active
    ws1.title = "data"
    frame = _as_frame(envelope.data)
    ws1.append([str(c) for c in frame.columns])
    for row in frame.itertuples(index=False):
        ws1.append([_plain(v) for v in row])

    ws2 = wb.create_sheet("meta")
    ws2.append(["key", "value"])
    for key, value in envelope.meta.items():
        ws2.append([key, value if isinstance(value, (str, int, float)) else json.dumps(_plain(value))])

    for ws in (ws1, ws2):
        for col in range(1, ws.max_column + 1):
            max_len = 0
            col_letter = get_column_letter(col)
            for cell in ws[col_letter]:
                v = "" if cell.value is None else str(cell.value)
                if len(v) > max_len:
                    max_len = len(v)
            ws.column_dimensions[col_letter].width = min(max_len + 2, 60)

    bio = BytesIO()
    wb.save(bio)
    return bio.getvalue()


def render_payload(envelope: ReportEnvelope, fmt: str) -> str:
    """Payload text for csv/json; depends only on envelope.data."""
    if fmt == "csv":
        return frame_csv(_as_frame(envelope.data))
    if fmt == "json":
        return dumps_json(envelope.data)
    raise ConfigError(f"No text payload for format {fmt!r}.")


def write_report(envelope: ReportEnvelope, fmt: str = "csv", path: str | None = None, stream=None,
                 meta_stream=None) -> None:
    """CSV: payload to path (meta in `<path>.meta.json`), or to stream with one `meta=<json>` line
    on meta_stream (stderr). JSON: {"meta", "data"}. XLSX: data and meta sheets."""
    if fmt not in FORMATS:
        raise ConfigError(f"Unknown output format {fmt!r}; choose one of {', '.join(FORMATS)}.")
    stream = stream or sys.stdout

    if fmt == "xlsx":
        if not path:
            raise ConfigError("The xlsx format needs --output.")
        atomic_write(path, _xlsx_bytes(envelope))
    elif fmt == "json":
        text = dumps_json({"meta": envelope.meta, "data": envelope.data})
        if path:
            atomic_write(path, text)
        else:
            stream.write(text)
    else:
        text = render_payload(envelope, "csv")
        if path:
            atomic_write(path, text)
            atomic_write(f"{path}.meta.json", dumps_json(envelope.meta))
        else:
            stream.write(text)
            meta = json.dumps(_plain(envelope.meta), separators=(",", ":"), allow_nan=False)
            (meta_stream or sys.stderr).write(f"meta={meta}\n")
    logger.info("Wrote %s report%s", fmt, f" to {path}" if path else "")


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------

def density_to_dict(dm: DensityMatrix, energy_unit: str | None = None) -> dict:
    scale = energy_scale(energy_unit)
    return {
        "energies": [float(e) / scale for e in dm.energies],
        "re": dm.coeffs.real.tolist(),
        "im": dm.coeffs.imag.tolist(),
        "energy_unit": energy_unit,
    }


def density_from_dict(data: dict, project: bool = False) -> DensityMatrix:
    missing = [k for k in ("energies", "re", "im") if k not in data]
    if missing:
        raise ConfigError(f"Density matrix file lacks field(s): {', '.join(missing)}.")
    energies = np.asarray(data["energies"], dtype=float) * energy_scale(data.get("energy_unit"))
    coeffs = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    if project:
        return project_density(energies, coeffs)
    try:
        return DensityMatrix(energies=energies, coeffs=coeffs)
    except ValueError as e:
        raise ConfigError(f"{e} Pass --project to clip it to the nearest valid density matrix.") from e


def read_density_matrix(path: str, project: bool = False) -> DensityMatrix:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Density matrix file not found: {path}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Density matrix file {path} is not valid JSON: {e}") from e
    return density_from_dict(data, project=project)


def write_density_matrix(dm: DensityMatrix, path: str, energy_unit: str | None = None) -> None:
    atomic_write(path, dumps_json(density_to_dict(dm, energy_unit)))
