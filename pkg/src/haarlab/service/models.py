"""Request/response models of the HTTP API.

Complex numbers travel as [re, im] pairs; matrices as base64 npz blobs
(the binary container) or CSV text with "re,im" cells; measures as plain
JSON (atoms, interval, density, node cumulative).
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

ComplexPair = Tuple[float, float]


class SeedModel(BaseModel):
    master: int = 0
    stream: int = 0


class SampleRequest(BaseModel):
    kind: Literal[
        "GUE", "GOE", "GSE",
        "HaarUnitary", "HaarOrthogonal", "HaarSymplectic",
        "Permutation", "ConjugatedDiagonal",
        "GinibreReal", "GinibreComplex", "GinibreQuaternion",
    ]
    dimension: int = Field(ge=1)
    seed: SeedModel = SeedModel()
    diagonal: Optional[List[ComplexPair]] = None
    include_matrix: bool = True
    matrix_format: Literal["npz", "csv"] = "npz"


class SampleResponse(BaseModel):
    dimension: int
    flags: List[str]
    operator_norm: float
    normalized_trace: ComplexPair
    matrix_npz_b64: Optional[str] = None
    matrix_csv: Optional[str] = None


class SpectrumRequest(BaseModel):
    matrix_npz_b64: Optional[str] = None
    matrix_csv: Optional[str] = None
    sample: Optional[SampleRequest] = None
    ordering: Literal["auto", "real_ascending", "argument_ascending"] = "auto"


class SpectrumResponse(BaseModel):
    ordering: str
    eigenvalues: List[ComplexPair]
    reconstruction_residual: float


class MeasureModel(BaseModel):
    interval: Tuple[float, float]
    grid_size: int
    atoms: List[Tuple[float, float]] = []
    density: List[float]
    node_cdf: List[float]

    @staticmethod
    def from_measure(mu) -> "MeasureModel":
        return MeasureModel(
            interval=(float(mu.grid[0]), float(mu.grid[-1])),
            grid_size=int(mu.grid.size),
            atoms=[(float(a), float(m)) for a, m in mu.atoms],
            density=[float(v) for v in mu.density],
            node_cdf=[float(v) for v in mu.node_cdf],
        )

    def to_measure(self):
        import numpy as np

        from ..freelimit.measures import CompactMeasure

        grid = np.linspace(self.interval[0], self.interval[1], self.grid_size)
        return CompactMeasure(
            tuple(self.atoms), grid, np.asarray(self.density), np.asarray(self.node_cdf)
        )


class MeasureOperand(BaseModel):
    """Either a law string (``atoms:...``/``semicircle:...``) or inline data."""

    law: Optional[str] = None
    measure: Optional[MeasureModel] = None


class ConvolveRequest(BaseModel):
    operation: Literal["add", "mult", "compress"]
    a: MeasureOperand
    b: Optional[MeasureOperand] = None
    t: Optional[float] = None
    grid_size: int = 4096


class ConvolveResponse(BaseModel):
    measure: MeasureModel
    mean: float
    variance: float
    support: List[Tuple[float, float]]


class NormOracleRequest(BaseModel):
    oracle: Literal[
        "akemann_ostrand", "kesten", "fell", "lehner", "haagerup", "kemp_speicher"
    ]
    a: Optional[List[ComplexPair]] = None
    p: Optional[int] = None
    d: Optional[int] = None
    alpha: Optional[List[ComplexPair]] = None
    l2: Optional[float] = None
    coefficients: Optional[List[List[List[ComplexPair]]]] = None  # list of k x k


class NormOracleResponse(BaseModel):
    oracle: str
    value: float


class PolynomialNormRequest(BaseModel):
    """Closed-form oracle lookup for a polynomial in text form."""

    polynomial: str


class ExperimentRequest(BaseModel):
    config_text: str


class ExperimentResponse(BaseModel):
    kind: str
    verdict: bool
    aggregates: Dict[str, Dict[str, float]]
    slope: Optional[float]
    oracle: Dict[str, object]
    notes: List[str]
    records_csv: str
    manifest: Dict[str, object]


class VerifyRequest(BaseModel):
    manifest: Dict[str, object]


class VerifyResponse(BaseModel):
    reproduced: bool
    verdict_match: bool
    stored_digest: str
    recomputed_digest: str
    stored_verdict: bool
    recomputed_verdict: bool


class HealthResponse(BaseModel):
    status: str
    version: str
