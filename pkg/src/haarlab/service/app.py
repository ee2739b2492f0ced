"""FastAPI application wrapping the numerics package.

Endpoints map one-to-one onto the CLI subcommands: /sample, /spectrum,
/convolve, /norm-oracle, /experiment/run and /verify.  The service is
stateless; experiment runs return the records CSV and manifest in the
response and leave persistence to the caller.
"""

from __future__ import annotations

import base64

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..ensembles import EnsembleKind, EnsembleSpec, sample, sample_ginibre
from ..errors import HaarlabError
from ..freelimit import (
    akemann_ostrand_norm,
    fell_norm,
    free_add_convolve,
    free_compression,
    free_mult_convolve,
    haagerup_bound,
    kemp_speicher_bound,
    kesten_norm,
    lehner_norm,
    measure_support,
)
from ..harness.config import parse_config, parse_measure_spec
from ..harness.experiments import classify_norm_oracle, run_experiment
from ..harness.report import records_to_csv, report_manifest, deterministic_digest
from ..matio import matrix_from_npz_bytes, matrix_npz_bytes
from ..ncalg import parse_polynomial
from ..seeding import Seed
from ..spectral import eig_hermitian, eig_unitary, normalized_trace, operator_norm
from . import models

SUPPORT_THRESHOLD_FRACTION = 1e-3

_GINIBRE_FIELDS = {
    "GinibreReal": "real",
    "GinibreComplex": "complex",
    "GinibreQuaternion": "quaternion",
}


def _sample_matrix(req: models.SampleRequest):
    seed = Seed(req.seed.master, req.seed.stream)
    if req.kind in _GINIBRE_FIELDS:
        return sample_ginibre(req.dimension, _GINIBRE_FIELDS[req.kind], seed)
    diagonal = None
    if req.diagonal is not None:
        diagonal = tuple(complex(re, im) for re, im in req.diagonal)
    spec = EnsembleSpec(EnsembleKind(req.kind), req.dimension, diagonal)
    return sample(spec, seed)


def _operand_measure(operand: models.MeasureOperand, grid_size: int):
    if operand.measure is not None:
        return operand.measure.to_measure()
    if operand.law:
        return parse_measure_spec(operand.law).to_measure(grid_size)
    raise HTTPException(status_code=422, detail="measure operand needs law or inline data")


def create_app() -> FastAPI:
    app = FastAPI(title="haarlab", version=__version__)

    @app.exception_handler(HaarlabError)
    async def _domain_error(request, exc: HaarlabError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/sample", response_model=models.SampleResponse)
    def sample_endpoint(req: models.SampleRequest):
        matrix = _sample_matrix(req)
        matrix.validate_flags()
        response = models.SampleResponse(
            dimension=matrix.dimension,
            flags=sorted(matrix.flags),
            operator_norm=operator_norm(matrix),
            normalized_trace=(
                normalized_trace(matrix).real,
                normalized_trace(matrix).imag,
            ),
        )
        if req.include_matrix:
            if req.matrix_format == "npz":
                response.matrix_npz_b64 = base64.b64encode(matrix_npz_bytes(matrix)).decode()
            else:
                import csv as _csv
                import io as _io

                buffer = _io.StringIO()
                writer = _csv.writer(buffer, quoting=_csv.QUOTE_ALL, lineterminator="\n")
                for row in matrix.entries:
                    writer.writerow([f"{c.real!r},{c.imag!r}" for c in row])
                response.matrix_csv = buffer.getvalue()
        return response

    @app.post("/spectrum", response_model=models.SpectrumResponse)
    def spectrum_endpoint(req: models.SpectrumRequest):
        import csv as _csv
        import io as _io

        from ..ensembles import SquareMatrix

        if req.matrix_npz_b64:
            matrix = matrix_from_npz_bytes(base64.b64decode(req.matrix_npz_b64))
        elif req.sample is not None:
            matrix = _sample_matrix(req.sample)
        elif req.matrix_csv:
            rows = [
                [complex(*map(float, cell.split(","))) for cell in row]
                for row in _csv.reader(_io.StringIO(req.matrix_csv))
                if row
            ]
            matrix = SquareMatrix(np.array(rows, dtype=complex))
        else:
            raise HTTPException(status_code=422, detail="no matrix provided")
        ordering = req.ordering
        if ordering == "auto":
            scale = max(float(np.abs(matrix.entries).max()), 1e-300)
            hermitian = matrix.hermitian_residual() <= 1e-10 * scale
            ordering = "real_ascending" if hermitian else "argument_ascending"
        if ordering == "real_ascending":
            symmetrized = (matrix.entries + matrix.entries.conj().T) / 2
            flagged = SquareMatrix(symmetrized, matrix.flags | {"hermitian"})
            decomposition = eig_hermitian(flagged)
        else:
            flagged = SquareMatrix(matrix.entries, matrix.flags | {"unitary"})
            decomposition = eig_unitary(flagged)
        return models.SpectrumResponse(
            ordering=decomposition.ordering,
            eigenvalues=[(v.real, v.imag) for v in decomposition.eigenvalues],
            reconstruction_residual=decomposition.reconstruction_residual(matrix),
        )

    @app.post("/convolve", response_model=models.ConvolveResponse)
    def convolve_endpoint(req: models.ConvolveRequest):
        mu = _operand_measure(req.a, req.grid_size)
        if req.operation == "compress":
            if req.t is None:
                raise HTTPException(status_code=422, detail="compress needs t")
            out = free_compression(mu, req.t)
        else:
            if req.b is None:
                raise HTTPException(status_code=422, detail="binary operation needs b")
            nu = _operand_measure(req.b, req.grid_size)
            if req.operation == "add":
                out = free_add_convolve(mu, nu, grid_size=req.grid_size)
            else:
                out = free_mult_convolve(mu, nu, grid_size=req.grid_size)
        threshold = SUPPORT_THRESHOLD_FRACTION * float(out.density.max(initial=0.0))
        support = measure_support(out, threshold)
        return models.ConvolveResponse(
            measure=models.MeasureModel.from_measure(out),
            mean=out.mean(),
            variance=out.variance(),
            support=list(support.intervals),
        )

    @app.post("/norm-oracle", response_model=models.NormOracleResponse)
    def norm_oracle_endpoint(req: models.NormOracleRequest):
        if req.oracle == "akemann_ostrand":
            if not req.a:
                raise HTTPException(status_code=422, detail="akemann_ostrand needs a")
            value = akemann_ostrand_norm([complex(re, im) for re, im in req.a])
        elif req.oracle == "kesten":
            value = kesten_norm(req.p or 0)
        elif req.oracle == "fell":
            value = fell_norm(req.p or 0)
        elif req.oracle == "haagerup":
            if req.d is None or not req.alpha:
                raise HTTPException(status_code=422, detail="haagerup needs d and alpha")
            value = haagerup_bound(req.d, [complex(re, im) for re, im in req.alpha])
        elif req.oracle == "kemp_speicher":
            if req.d is None or req.l2 is None:
                raise HTTPException(status_code=422, detail="kemp_speicher needs d and l2")
            value = kemp_speicher_bound(req.d, req.l2)
        else:
            if not req.coefficients:
                raise HTTPException(status_code=422, detail="lehner needs coefficients")
            mats = [
                np.array([[complex(re, im) for re, im in row] for row in mat])
                for mat in req.coefficients
            ]
            value = lehner_norm(mats)
        return models.NormOracleResponse(oracle=req.oracle, value=value)

    @app.post("/norm-oracle/polynomial", response_model=models.NormOracleResponse)
    def polynomial_oracle_endpoint(req: models.PolynomialNormRequest):
        name, value = classify_norm_oracle(parse_polynomial(req.polynomial))
        return models.NormOracleResponse(oracle=name, value=value)

    @app.post("/experiment/run", response_model=models.ExperimentResponse)
    def experiment_endpoint(req: models.ExperimentRequest):
        config = parse_config(req.config_text)
        report = run_experiment(config)
        csv_text = records_to_csv(report.records)
        manifest = report_manifest(report, config, csv_text)
        return models.ExperimentResponse(
            kind=report.kind,
            verdict=report.verdict(config.tolerance),
            aggregates={str(n): a for n, a in report.aggregates().items()},
            slope=report.slope(),
            oracle=dict(report.oracle_info),
            notes=report.notes,
            records_csv=csv_text,
            manifest=manifest,
        )

    @app.post("/verify", response_model=models.VerifyResponse)
    def verify_endpoint(req: models.VerifyRequest):
        manifest = req.manifest
        config = parse_config(str(manifest["config"]))
        report = run_experiment(config)
        csv_text = records_to_csv(report.records)
        digest = deterministic_digest(csv_text)
        verdict = report.verdict(config.tolerance)
        return models.VerifyResponse(
            reproduced=digest == manifest["csv_sha256"],
            verdict_match=verdict == manifest["verdict"],
            stored_digest=str(manifest["csv_sha256"]),
            recomputed_digest=digest,
            stored_verdict=bool(manifest["verdict"]),
            recomputed_verdict=verdict,
        )

    return app
