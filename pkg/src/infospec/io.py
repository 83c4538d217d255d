"""JSON ingest of operators and measures; CSV/JSON emission with provenance."""
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import FiniteMeasure, LLRSpectrum
from .errors import InputError
from .operators import as_hermitian

INGEST_ATOL = 1e-9
FLOAT_FORMAT = "{:.17g}"


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def operator_from_dict(d):
    """{"dim": d, "re": [[...]], "im": [[...]]}; "im" defaults to zero."""
    if not isinstance(d, dict) or "re" not in d:
        raise InputError('operator JSON needs a "re" matrix')
    try:
        re = np.array(d["re"], dtype=float)
        im = np.array(d["im"], dtype=float) if d.get("im") is not None else np.zeros_like(re)
    except (TypeError, ValueError) as exc:
        raise InputError(f"operator entries must be numbers: {exc}") from exc
    if re.shape != im.shape:
        raise InputError(f"re and im shapes differ: {re.shape} vs {im.shape}")
    dim = d.get("dim", re.shape[0] if re.ndim else 0)
    if re.ndim != 2 or re.shape != (dim, dim):
        raise InputError(f"expected a {dim}x{dim} matrix, got shape {re.shape}")
    return as_hermitian(re + 1j * im if np.any(im) else re, atol=INGEST_ATOL)


def operator_to_dict(a):
    a = np.asarray(a)
    out = {"dim": int(a.shape[0]), "re": np.real(a).tolist()}
    if np.iscomplexobj(a) and np.any(np.imag(a)):
        out["im"] = np.imag(a).tolist()
    return out


def measure_from_dict(d):
    """{"weights": [...], "normalized": true|false}."""
    if not isinstance(d, dict) or "weights" not in d:
        raise InputError('measure JSON needs "weights"')
    try:
        w = np.array(d["weights"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"weights must be numbers: {exc}") from exc
    return FiniteMeasure(w, normalized=bool(d.get("normalized", True)))


def measure_to_dict(m: FiniteMeasure):
    return {"weights": m.weights.tolist(), "normalized": m.normalized}


def load_input(path):
    """An operator (ndarray) or a FiniteMeasure, decided by the keys present."""
    d = _load(path)
    if isinstance(d, dict) and "weights" in d:
        return measure_from_dict(d)
    return operator_from_dict(d)


def config_hash(config: dict):
    """sha256 of the canonical JSON form of ``config``, first 16 hex digits."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def format_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return FLOAT_FORMAT.format(x)
    return str(x)


def csv_text(header, rows, config: dict):
    """CSV with one leading comment line carrying version and config hash."""
    buf = io.StringIO()
    buf.write(f"# infospec {__version__} config {config_hash(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def read_csv(text):
    """(comment, header, rows of strings) from `csv_text` output."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise InputError("missing provenance comment line")
    rows = list(csv.reader(lines[1:]))
    return lines[0], rows[0], rows[1:]


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _clean(x):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)) and not math.isfinite(float(x)):
        return format_value(x)
    return x


def json_text(report: dict, config: dict):
    body = {"version": __version__, "config": config, "config_hash": config_hash(config), **report}
    return json.dumps(_clean(body), sort_keys=True, indent=2, default=_json_default) + "\n"


def write_text(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def spectrum_rows(spec: LLRSpectrum):
    """Rows (n, z, rho_mass, sigma_mass) of a spectrum dump."""
    return [
        (spec.n, float(z), float(r), float(s))
        for z, r, s in zip(spec.z, np.exp(spec.log_rho), np.exp(spec.log_sigma))
    ]
