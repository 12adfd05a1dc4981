"""Plain-text output: CSV with one ``#`` header line, and run manifests.

Floats are written with 17 significant digits, enough to round-trip every
double, so two runs can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

VERSION = "0.1.0"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, columns, rows) -> Path:
    """Write ``rows`` (2-D array or iterable of tuples) under a ``# a,b,c`` header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        fh.write("# " + ",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing '#' header line")
    header = [c.strip() for c in lines[0][1:].split(",")]
    return header, [ln.split(",") for ln in lines[1:] if ln.strip()]


def read_numeric_csv(path) -> tuple[list[str], np.ndarray]:
    header, rows = read_csv(path)
    return header, np.array([[float(c) for c in r] for r in rows], dtype=float).reshape(-1, len(header))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    parameters: dict
    tool_version: str = VERSION
    input_hashes: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)  # file name -> sha256
    wall_clock_s: float = 0.0
    status: str = "ok"
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add_output(self, path) -> None:
        path = Path(path)
        self.outputs[path.name] = sha256_file(path)

    def write(self, out_dir) -> Path:
        self.wall_clock_s = time.perf_counter() - self._t0
        d = asdict(self)
        d.pop("_t0")
        path = Path(out_dir) / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
        return path


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")
