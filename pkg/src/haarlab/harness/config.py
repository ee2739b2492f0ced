"""Plain-text experiment configuration with typed sections.

The format is INI-style (parsed with :mod:`configparser`), one typed
section per concern::

    [experiment]
    kind = norm_convergence        ; one of the experiment kinds below
    master = 7                     ; RNG master key
    seeds = 0 1 2 3 4              ; stream indices, one trial per seed
    n_grid = 200 500 1000          ; ascending matrix dimensions
    tolerance = 0.1                ; pass band for the verdict statistic
    epsilon = 0.1                  ; support-containment margin
    output = reports/pisier        ; directory for records.csv + manifest.json

    [haar]
    count = 3                      ; number of Haar matrices (p)
    group = unitary                ; unitary | orthogonal | symplectic

    [polynomial]
    text = (1.0,0.0) * x1 + (1.0,0.0) * x2 + (1.0,0.0) * x3

    [word]
    text = x1 x2 x1' x2'

    [spectrum a]                   ; constant-matrix spectra, by quantiles
    law = atoms:-1:0.5,1:0.5       ; also semicircle:<var>, uniform:<a>:<b>

    [options]
    branch = add                   ; sum_product_spectrum: add | mult
    degree = 2                     ; word length for haagerup/rdiagonal
    alpha = (1,0) (0,1)            ; word coefficients; omit for seeded draw
    t = 0.5                        ; compression parameter
    samples = 10000                ; inner draws for haar_invariance

Measure-law strings double as the CLI syntax for `convolve`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..errors import SpecError
from ..freelimit.measures import CompactMeasure, semicircle_measure, two_point_measure
from ..ncalg import NcPolynomial, StarMonomial, parse_polynomial, _parse_word
from ..seeding import Seed

EXPERIMENT_KINDS = (
    "norm_convergence",
    "trace_convergence",
    "sum_product_spectrum",
    "compression_spectrum",
    "haagerup_check",
    "rdiagonal_check",
    "permutation_contrast",
    "coupling_identity",
    "haar_invariance",
)

HAAR_GROUPS = ("unitary", "orthogonal", "symplectic")


@dataclass(frozen=True)
class MeasureSpec:
    """Config-level description of a compactly supported spectral law."""

    law: str
    params: Tuple[float, ...]

    def to_measure(self, grid_size: int = 4096) -> CompactMeasure:
        if self.law == "atoms":
            pairs = list(zip(self.params[0::2], self.params[1::2]))
            return CompactMeasure.from_atoms(pairs)
        if self.law == "semicircle":
            return semicircle_measure(self.params[0], grid_size)
        if self.law == "uniform":
            a, b = self.params
            if b <= a:
                raise SpecError("uniform law needs a < b")
            return CompactMeasure.from_density(
                (a, b),
                lambda x: np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0),
                grid_size,
                cdf_fn=lambda x: np.clip((x - a) / (b - a), 0.0, 1.0),
            )
        raise SpecError(f"unknown law: {self.law!r}")

    def diagonal(self, n: int) -> np.ndarray:
        """Deterministic diagonal: quantiles at the midpoint levels (i - 1/2)/n."""
        levels = (np.arange(1, n + 1) - 0.5) / n
        return self.to_measure().quantile(levels)

    def __str__(self):
        if self.law == "atoms":
            pairs = zip(self.params[0::2], self.params[1::2])
            return "atoms:" + ",".join(f"{a:g}:{m:g}" for a, m in pairs)
        return self.law + ":" + ":".join(f"{p:g}" for p in self.params)


def parse_measure_spec(text: str) -> MeasureSpec:
    """Parse ``atoms:loc:mass,loc:mass``, ``semicircle:var``, ``uniform:a:b``."""
    text = text.strip()
    law, _, rest = text.partition(":")
    law = law.strip().lower()
    if law == "atoms":
        params = []
        for pair in rest.split(","):
            loc, _, mass = pair.partition(":")
            params.extend([float(loc), float(mass)])
        if abs(sum(params[1::2]) - 1.0) > 1e-9:
            raise SpecError("atom masses must sum to 1")
        return MeasureSpec("atoms", tuple(params))
    if law == "semicircle":
        return MeasureSpec("semicircle", (float(rest),))
    if law == "uniform":
        a, _, b = rest.partition(":")
        return MeasureSpec("uniform", (float(a), float(b)))
    raise SpecError(f"unknown law: {law!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully parsed experiment description; immutable and reproducible."""

    kind: str
    master: int
    seed_streams: Tuple[int, ...]
    n_grid: Tuple[int, ...]
    tolerance: float
    epsilon: float = 0.1
    output_path: Optional[str] = None
    haar_count: int = 0
    haar_group: str = "unitary"
    polynomial: Optional[NcPolynomial] = None
    word: Optional[StarMonomial] = None
    spectra: Tuple[MeasureSpec, ...] = ()
    branch: str = "add"
    degree: int = 1
    alpha: Optional[Tuple[complex, ...]] = None
    compression_t: float = 0.5
    samples: int = 10000
    raw_text: str = ""

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise SpecError(f"unknown experiment kind: {self.kind!r}")
        if not self.seed_streams:
            raise SpecError("seeds must be nonempty")
        if not self.n_grid:
            raise SpecError("n_grid must be nonempty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise SpecError("n_grid must be strictly ascending")
        if self.tolerance <= 0:
            raise SpecError("tolerance must be positive")
        if self.haar_group not in HAAR_GROUPS:
            raise SpecError(f"unknown Haar group: {self.haar_group!r}")
        if self.branch not in ("add", "mult"):
            raise SpecError("branch must be add or mult")

    @property
    def seeds(self) -> Tuple[Seed, ...]:
        return tuple(Seed(self.master, s) for s in self.seed_streams)


def _parse_complex_list(text: str) -> Tuple[complex, ...]:
    out = []
    for token in text.split():
        token = token.strip().strip("()")
        re_part, _, im_part = token.partition(",")
        out.append(complex(float(re_part), float(im_part or 0.0)))
    return tuple(out)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"bad config: {exc}") from exc
    if "experiment" not in parser:
        raise SpecError("config needs an [experiment] section")
    exp = parser["experiment"]
    kind = exp.get("kind", "").strip()
    master = exp.getint("master", 0)
    seeds = tuple(int(s) for s in exp.get("seeds", "0").split())
    n_grid = tuple(int(n) for n in exp.get("n_grid", "100").split())
    tolerance = exp.getfloat("tolerance", 0.1)
    epsilon = exp.getfloat("epsilon", 0.1)
    output = exp.get("output", "").strip() or None

    haar_count = 0
    haar_group = "unitary"
    if "haar" in parser:
        haar_count = parser["haar"].getint("count", 0)
        haar_group = parser["haar"].get("group", "unitary").strip().lower()

    polynomial = None
    if "polynomial" in parser:
        polynomial = parse_polynomial(parser["polynomial"]["text"].strip())

    word = None
    if "word" in parser:
        word = _parse_word(parser["word"]["text"].strip())

    spectra = []
    for section in parser.sections():
        if section == "spectrum" or section.startswith("spectrum "):
            spectra.append(parse_measure_spec(parser[section]["law"]))

    branch = "add"
    degree = 1
    alpha = None
    compression_t = 0.5
    samples = 10000
    if "options" in parser:
        opt = parser["options"]
        branch = opt.get("branch", "add").strip().lower()
        degree = opt.getint("degree", 1)
        if opt.get("alpha"):
            alpha = _parse_complex_list(opt["alpha"])
        compression_t = opt.getfloat("t", 0.5)
        samples = opt.getint("samples", 10000)

    return ExperimentConfig(
        kind=kind,
        master=master,
        seed_streams=seeds,
        n_grid=n_grid,
        tolerance=tolerance,
        epsilon=epsilon,
        output_path=output,
        haar_count=haar_count,
        haar_group=haar_group,
        polynomial=polynomial,
        word=word,
        spectra=tuple(spectra),
        branch=branch,
        degree=degree,
        alpha=alpha,
        compression_t=compression_t,
        samples=samples,
        raw_text=text,
    )
