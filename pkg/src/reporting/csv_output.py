"""CSV and JSON emission for sweeps, spectra, fits and normal-form reports."""

import csv
import io
import json
import math
from pathlib import Path
from typing import TextIO

from src.config import settings
from src.errors import ConfigurationError
from src.normal_form.pipeline import NormalFormResult
from src.spectral.spectrum import SpectrumList

SWEEP_COLUMNS = [
    "h",
    "z_re",
    "z_im",
    "N_used",
    "nu_total",
    "resnorm_flat",
    "log_resnorm_flat",
    "resnorm_gram",
    "dist_spec",
    "converged",
    "out_of_regime",
]
SPECTRUM_COLUMNS = ["re", "im", "multiplicity"]


def format_float(value: float | None) -> str:
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, settings.csv_float_format)


def _flag(value: bool) -> str:
    return "true" if value else "false"


def sweep_csv_rows(rows) -> list[dict[str, str]]:
    return [
        {
            "h": format_float(r.h),
            "z_re": format_float(r.z.real),
            "z_im": format_float(r.z.imag),
            "N_used": str(r.N_used),
            "nu_total": str(r.nu_total),
            "resnorm_flat": format_float(r.resnorm_flat),
            "log_resnorm_flat": format_float(r.log_resnorm_flat),
            "resnorm_gram": format_float(r.resnorm_gram),
            "dist_spec": format_float(r.dist_spec),
            "converged": _flag(r.converged),
            "out_of_regime": _flag(r.out_of_regime),
        }
        for r in rows
    ]


def _write_dicts(records: list[dict], columns: list[str], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)


def _emit(text: str, path: Path | None, stream: TextIO | None) -> None:
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with Path(path).open("w", newline="", encoding="utf-8") as f:
            f.write(text)
    elif stream is not None:
        stream.write(text)


def sweep_to_csv(rows) -> str:
    buffer = io.StringIO()
    _write_dicts(sweep_csv_rows(rows), SWEEP_COLUMNS, buffer)
    return buffer.getvalue()


def write_sweep_csv(rows, path: Path | None = None, stream: TextIO | None = None) -> str:
    """
    Write sweep rows in grid order with the fixed column set.

    Floats use settings.csv_float_format, flags are "true"/"false", and a
    missing Gram norm is an empty field. Returns the CSV text.
    """
    text = sweep_to_csv(rows)
    _emit(text, path, stream)
    return text


def write_spectrum_csv(
    spec: SpectrumList, path: Path | None = None, stream: TextIO | None = None
) -> str:
    buffer = io.StringIO()
    records = [
        {
            "re": format_float(p.value.real),
            "im": format_float(p.value.imag),
            "multiplicity": str(p.multiplicity),
        }
        for p in spec.points
    ]
    _write_dicts(records, SPECTRUM_COLUMNS, buffer)
    text = buffer.getvalue()
    _emit(text, path, stream)
    return text


def _json_default(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json(data) -> str:
    return json.dumps(data, indent=2, default=_json_default) + "\n"


def write_json(data, path: Path | None = None, stream: TextIO | None = None) -> str:
    text = to_json(data)
    _emit(text, path, stream)
    return text


def write_normal_form_report(result: NormalFormResult, path: Path) -> None:
    write_json(result.to_report(), path)


def read_normal_form_report(path: Path) -> NormalFormResult:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Normal-form report not found: {path}")
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Report {path} is not valid JSON: {exc}")
    return NormalFormResult.from_report(report)
