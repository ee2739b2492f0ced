"""Report persistence: trial CSV, JSON manifest, bit-exact verification.

``records.csv`` has one row per trial record, column order::

    dimension,seed,statistic,measured,oracle,passed,wall_time_s

Floats are written with ``repr`` so parsing is lossless.  The manifest
stores the full config text, package version, seeds, verdict, aggregates
and a SHA-256 digest of the deterministic view of the CSV (all columns
except wall_time_s, which is the only nondeterministic field).  Verifying
a manifest re-runs its config and compares digests.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Dict, List, Tuple

from .. import __version__
from .config import ExperimentConfig, parse_config
from .experiments import ConvergenceReport, TrialRecord, run_experiment

CSV_COLUMNS = ("dimension", "seed", "statistic", "measured", "oracle", "passed", "wall_time_s")


def _format_float(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def records_to_csv(records: List[TrialRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.dimension,
                r.seed,
                r.statistic,
                _format_float(r.measured),
                _format_float(r.oracle),
                int(r.passed),
                _format_float(r.wall_time),
            ]
        )
    return buffer.getvalue()


def deterministic_digest(csv_text: str) -> str:
    """SHA-256 of the CSV with the wall-time column dropped."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for row in csv.reader(io.StringIO(csv_text)):
        if row:
            writer.writerow(row[:-1])
    return hashlib.sha256(out.getvalue().encode()).hexdigest()


def report_manifest(report: ConvergenceReport, config: ExperimentConfig, csv_text: str) -> Dict:
    return {
        "kind": report.kind,
        "version": __version__,
        "config": config.raw_text,
        "master": config.master,
        "seeds": list(config.seed_streams),
        "n_grid": list(config.n_grid),
        "tolerance": config.tolerance,
        "verdict": report.verdict(config.tolerance),
        "verdict_mode": report.verdict_mode,
        "oracle": {k: v for k, v in report.oracle_info.items()},
        "aggregates": {str(n): a for n, a in report.aggregates().items()},
        "slope": report.slope(),
        "notes": report.notes,
        "csv_sha256": deterministic_digest(csv_text),
        "rows": len(report.records),
    }


def emit_report(report: ConvergenceReport, config: ExperimentConfig, path) -> Tuple[Path, Path]:
    """Write records.csv and manifest.json under ``path`` (a directory)."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    csv_text = records_to_csv(report.records)
    csv_path = directory / "records.csv"
    csv_path.write_text(csv_text)
    manifest = report_manifest(report, config, csv_text)
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path, manifest_path


def load_manifest(path) -> Dict:
    return json.loads(Path(path).read_text())


def verify_manifest(path) -> Dict:
    """Re-run the manifest's config; compare digests and verdict.

    Returns a dict with ``reproduced`` (digest match), ``verdict_match``
    and both digests; the caller decides the exit code.
    """
    manifest = load_manifest(path)
    config = parse_config(manifest["config"])
    report = run_experiment(config)
    csv_text = records_to_csv(report.records)
    new_digest = deterministic_digest(csv_text)
    verdict = report.verdict(config.tolerance)
    return {
        "reproduced": new_digest == manifest["csv_sha256"],
        "verdict_match": verdict == manifest["verdict"],
        "stored_digest": manifest["csv_sha256"],
        "recomputed_digest": new_digest,
        "stored_verdict": manifest["verdict"],
        "recomputed_verdict": verdict,
    }
