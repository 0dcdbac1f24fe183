"""File artifacts: CSV tables, PGM images, raw field dumps.

Every writer goes through :func:`atomic_write` (temp file + rename) so a
crashed run never leaves a half-written artifact under the final name.
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile

import numpy as np

from .analysis import TransmissionCurve
from .layout import mask_to_pgm
from .solver import ProbeRecord

SWF_MAGIC = b"SWF1"


def atomic_write(path: str, data: bytes | str) -> None:
    """Write a file atomically (same-directory temp file, then rename)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float) or isinstance(v, np.floating):
        return f"{v:.10g}"
    return str(v)


def probe_csv(records: list[ProbeRecord]) -> str:
    """Spectra CSV: probe_id,y_mm,z_mm,freq_ghz,re,im,mag_db."""
    rows = []
    for rec in records:
        for f, value in zip(rec.frequencies, rec.spectrum):
            mag = abs(value)
            rows.append((
                rec.probe_id, rec.y * 1e3, rec.z * 1e3, f / 1e9,
                value.real, value.imag,
                20.0 * np.log10(mag) if mag > 0 else float("-inf"),
            ))
    return _csv_text(["probe_id", "y_mm", "z_mm", "freq_ghz", "re", "im", "mag_db"], rows)


def curves_csv(curves: list[TransmissionCurve]) -> str:
    """Long-format S21 CSV: layout,d_mm,freq_ghz,s21_db."""
    rows = []
    for c in curves:
        for f, s in zip(c.frequencies, c.s21_db):
            rows.append((c.layout_id, c.distance_m * 1e3, f / 1e9, s))
    return _csv_text(["layout", "d_mm", "freq_ghz", "s21_db"], rows)


def metrics_csv(rows: list[dict]) -> str:
    """Summary metrics CSV, one row per (layout, distance)."""
    header = ["layout", "d_mm", "f_opt_ghz", "band_lo_ghz", "band_hi_ghz",
              "avg_s21_db", "slope_db_per_m", "r2", "isolation_db"]
    out = []
    for r in rows:
        out.append(tuple(r.get(k, "") for k in header))
    return _csv_text(header, out)


def raytrace_csv(d_m: np.ndarray, columns: dict[str, np.ndarray]) -> str:
    """Path-loss comparison CSV with the fixed six comparison columns."""
    header = ["d_m", "pec_db", "copper_db", "galinstan_db",
              "space_db", "nonguided_db", "coax_db"]
    rows = []
    for i, d in enumerate(d_m):
        rows.append((d,) + tuple(columns[k][i] for k in header[1:]))
    return _csv_text(header, rows)


def field_to_pgm(field: np.ndarray, floor_db: float = -60.0) -> bytes:
    """Log-magnitude image of a field array as a binary PGM (P5)."""
    mag = np.abs(field)
    peak = float(mag.max())
    if peak <= 0.0:
        level = np.zeros_like(mag)
    else:
        db = 20.0 * np.log10(np.maximum(mag, peak * 10.0 ** (floor_db / 20.0)) / peak)
        level = (db - floor_db) / (-floor_db)
    img = np.round(level * 255.0).astype(np.uint8)
    ny, nz = img.shape
    return f"P5\n{nz} {ny}\n255\n".encode("ascii") + img.tobytes()


def write_swf(path: str, field: np.ndarray) -> None:
    """Raw little-endian float64 dump with a 16-byte header.

    Header: magic "SWF1", rows and cols as little-endian uint32, then a
    reserved uint32 (zero). Data follows row-major.
    """
    arr = np.ascontiguousarray(field, dtype="<f8")
    header = SWF_MAGIC + struct.pack("<III", arr.shape[0], arr.shape[1], 0)
    atomic_write(path, header + arr.tobytes())


def read_swf(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != SWF_MAGIC:
            raise ValueError(f"{path}: not a field dump (bad magic)")
        rows, cols, _ = struct.unpack("<III", header[4:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: truncated field dump")
    return data.reshape(rows, cols).copy()


def write_mask_pgm(path: str, mask: np.ndarray) -> None:
    atomic_write(path, mask_to_pgm(mask))


def write_field_pgm(path: str, field: np.ndarray, floor_db: float = -60.0) -> None:
    atomic_write(path, field_to_pgm(field, floor_db))
