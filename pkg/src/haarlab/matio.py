"""File formats: matrix containers, step/quantile CSVs, measure files.

Matrices have two serializations: a binary npz container (entries plus
flags, lossless) and CSV with row-major quoted "re,im" cells.  A measure
file is a single text file whose first line is a JSON header (interval,
grid size, atoms) followed by CSV rows of density and node-cumulative
values.  All text floats are written with ``repr``, which round-trips
doubles exactly.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .ensembles import SquareMatrix
from .errors import SpecError
from .freelimit.measures import CompactMeasure
from .spectral import QuantileMap, StepFunction


# -- matrices --------------------------------------------------------------------


def save_matrix_npz(matrix: SquareMatrix, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        np.savez(
            handle,
            entries=matrix.entries,
            flags=np.array(sorted(matrix.flags), dtype="U16"),
        )


def load_matrix_npz(path) -> SquareMatrix:
    with np.load(path, allow_pickle=False) as data:
        return SquareMatrix(data["entries"], frozenset(str(f) for f in data["flags"]))


def matrix_npz_bytes(matrix: SquareMatrix) -> bytes:
    buffer = io.BytesIO()
    np.savez(
        buffer,
        entries=matrix.entries,
        flags=np.array(sorted(matrix.flags), dtype="U16"),
    )
    return buffer.getvalue()


def matrix_from_npz_bytes(blob: bytes) -> SquareMatrix:
    with np.load(io.BytesIO(blob), allow_pickle=False) as data:
        return SquareMatrix(data["entries"], frozenset(str(f) for f in data["flags"]))


def save_matrix_csv(matrix: SquareMatrix, path) -> None:
    """Row-major CSV, each cell the quoted pair "re,im"."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_ALL)
        for row in matrix.entries:
            writer.writerow([f"{c.real!r},{c.imag!r}" for c in row])


def load_matrix_csv(path, flags: Sequence[str] = ()) -> SquareMatrix:
    rows = []
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row:
                continue
            rows.append([complex(*map(float, cell.split(","))) for cell in row])
    if not rows:
        raise SpecError(f"empty matrix file: {path}")
    return SquareMatrix(np.array(rows, dtype=complex), frozenset(flags))


# -- step functions and quantile maps ----------------------------------------------


def save_step_function_csv(f: StepFunction, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        for x, v in zip(f.jump_points, f.cumulative_values):
            writer.writerow([repr(float(x)), repr(float(v))])


def load_step_function_csv(path) -> StepFunction:
    xs, vs = [], []
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row:
                continue
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    return StepFunction(np.asarray(xs), np.asarray(vs))


def save_quantile_map_csv(q: QuantileMap, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_ALL)
        for s, v in zip(q.grid, q.values):
            writer.writerow([repr(float(s)), f"{v.real!r},{v.imag!r}"])


def load_quantile_map_csv(path) -> QuantileMap:
    ss, vs = [], []
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row:
                continue
            ss.append(float(row[0]))
            vs.append(complex(*map(float, row[1].split(","))))
    return QuantileMap(np.asarray(vs), np.asarray(ss))


# -- measures ----------------------------------------------------------------------


def measure_to_text(mu: CompactMeasure) -> str:
    """JSON header line + CSV rows "density,node_cdf"; exact round-trip."""
    header = {
        "interval": [repr(float(mu.grid[0])), repr(float(mu.grid[-1]))],
        "grid_size": int(mu.grid.size),
        "atoms": [[repr(float(a)), repr(float(m))] for a, m in mu.atoms],
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for d, c in zip(mu.density, mu.node_cdf):
        lines.append(f"{float(d)!r},{float(c)!r}")
    return "\n".join(lines) + "\n"


def measure_from_text(text: str) -> CompactMeasure:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise SpecError("empty measure text")
    header = json.loads(lines[0])
    lo, hi = (float(v) for v in header["interval"])
    grid_size = int(header["grid_size"])
    atoms = tuple((float(a), float(m)) for a, m in header.get("atoms", []))
    rows = [line.split(",") for line in lines[1:]]
    if len(rows) != grid_size:
        raise SpecError("density row count disagrees with the declared grid size")
    density = np.array([float(r[0]) for r in rows])
    node_cdf = np.array([float(r[1]) for r in rows])
    grid = np.linspace(lo, hi, grid_size)
    return CompactMeasure(atoms, grid, density, node_cdf)


def save_measure(mu: CompactMeasure, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(measure_to_text(mu))


def load_measure(path) -> CompactMeasure:
    return measure_from_text(Path(path).read_text())


# -- support sets -------------------------------------------------------------------


def support_to_json(support) -> str:
    return json.dumps({"intervals": [[repr(a), repr(b)] for a, b in support.intervals]})


def support_from_json(text: str):
    from .freelimit.measures import SupportSet

    data = json.loads(text)
    return SupportSet(tuple((float(a), float(b)) for a, b in data["intervals"]))
