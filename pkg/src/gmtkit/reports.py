"""Deterministic run reports with recomputable certificates.

A report is canonical JSON: sorted keys, fixed separators, no timestamps,
native float repr.  Two runs with the same RunConfig therefore produce
byte-identical report files; wall-clock timings go to a separate sidecar
that is excluded from verification.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

TOOL = {"name": "gmtkit", "version": "0.1.0"}


def _plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and obj == float("inf"):
        return "inf"
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class RunReport:
    """Accumulates config, input digests, certificates, and output digests."""

    def __init__(self, config: dict):
        self.config = _plain(config)
        self.inputs: dict = {}
        self.outputs: dict = {}
        self.figures: list = []
        self.certificates: dict = {}
        self._timings: dict = {}
        self._t0 = time.perf_counter()

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        self.outputs[Path(path).name] = sha256_file(path)

    def add_figure(self, path) -> None:
        # presentation artifact: listed, never digested
        self.figures.append(Path(path).name)

    def certify(self, section: str, payload) -> None:
        self.certificates[section] = _plain(payload)

    def time_mark(self, label: str) -> None:
        self._timings[label] = time.perf_counter() - self._t0

    def body(self) -> dict:
        return {
            "tool": TOOL,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "figures": sorted(self.figures),
            "certificates": self.certificates,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / "report.json"
        report_path.write_text(canonical_json(self.body()))
        self.time_mark("total")
        (out / "timings.json").write_text(json.dumps(self._timings, indent=1) + "\n")
        return report_path


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def certificates_digest(report: dict) -> str:
    return sha256_text(canonical_json(report.get("certificates", {})))
