"""Noncommutative *-polynomials with k x k matrix coefficients.

A monomial is a word in letters ``x1, x2, ..., xp`` and their adjoints
(written ``x1'`` in text form); the empty word is the unit.  Polynomials
map monomials to k x k complex coefficient matrices (k = 1 for scalars)
over a fixed alphabet size.  Words are stored uncompressed: ``x1 x1'`` is
a length-2 word, and the reduced-word enumerators below only require
adjacent *indices* to differ, regardless of stars.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .ensembles import SquareMatrix
from .errors import SpecError


@dataclass(frozen=True)
class StarLetter:
    """One letter of a word: 1-based index, optionally starred."""

    index: int
    starred: bool = False

    def __post_init__(self):
        if self.index < 1:
            raise SpecError("letter index must be >= 1")

    def adjoint(self) -> "StarLetter":
        return StarLetter(self.index, not self.starred)

    def __str__(self):
        return f"x{self.index}'" if self.starred else f"x{self.index}"


@dataclass(frozen=True)
class StarMonomial:
    """Ordered word of letters; the empty word is the unit."""

    letters: Tuple[StarLetter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    @property
    def degree(self) -> int:
        return len(self.letters)

    def max_index(self) -> int:
        return max((l.index for l in self.letters), default=0)

    def adjoint(self) -> "StarMonomial":
        return StarMonomial(tuple(l.adjoint() for l in reversed(self.letters)))

    def __mul__(self, other: "StarMonomial") -> "StarMonomial":
        return StarMonomial(self.letters + other.letters)

    def __str__(self):
        return " ".join(str(l) for l in self.letters) if self.letters else "1"


def word(*spec: int) -> StarMonomial:
    """Shorthand: positive integers are letters, negative their adjoints."""
    return StarMonomial(tuple(StarLetter(abs(i), i < 0) for i in spec))


class NcPolynomial:
    """*-polynomial over a fixed alphabet with k x k matrix coefficients."""

    def __init__(
        self,
        alphabet_size: int,
        coefficient_dimension: int = 1,
        terms: Dict[StarMonomial, np.ndarray] | None = None,
    ):
        if alphabet_size < 1:
            raise SpecError("alphabet size must be >= 1")
        if coefficient_dimension < 1:
            raise SpecError("coefficient dimension must be >= 1")
        self.alphabet_size = int(alphabet_size)
        self.coefficient_dimension = int(coefficient_dimension)
        k = self.coefficient_dimension
        self.terms: Dict[StarMonomial, np.ndarray] = {}
        for mono, coeff in (terms or {}).items():
            c = np.asarray(coeff, dtype=complex)
            if c.shape == () and k == 1:
                c = c.reshape(1, 1)
            if c.shape != (k, k):
                raise SpecError(f"coefficient must be {k}x{k}")
            if mono.max_index() > alphabet_size:
                raise SpecError("letter index outside the alphabet")
            if np.any(c != 0):
                self.terms[mono] = c

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_scalar_terms(alphabet_size: int, terms: Dict[StarMonomial, complex]) -> "NcPolynomial":
        return NcPolynomial(
            alphabet_size, 1, {m: np.array([[c]], dtype=complex) for m, c in terms.items()}
        )

    @staticmethod
    def sum_of_letters(p: int) -> "NcPolynomial":
        """x1 + ... + xp."""
        return NcPolynomial.from_scalar_terms(p, {word(i): 1.0 for i in range(1, p + 1)})

    @staticmethod
    def kesten_sum(p: int) -> "NcPolynomial":
        """(x1 + x1') + ... + (xp + xp')."""
        terms = {}
        for i in range(1, p + 1):
            terms[word(i)] = 1.0
            terms[word(-i)] = 1.0
        return NcPolynomial.from_scalar_terms(p, terms)

    @staticmethod
    def weighted_sum(coefficients: Sequence[complex]) -> "NcPolynomial":
        """a1 x1 + ... + ap xp with scalar weights."""
        return NcPolynomial.from_scalar_terms(
            len(coefficients), {word(i + 1): c for i, c in enumerate(coefficients)}
        )

    @staticmethod
    def block_sum(coefficients: Sequence[np.ndarray]) -> "NcPolynomial":
        """a1 (x) x1 + ... + ap (x) xp with k x k matrix weights."""
        mats = [np.asarray(c, dtype=complex) for c in coefficients]
        k = mats[0].shape[0]
        return NcPolynomial(len(mats), k, {word(i + 1): m for i, m in enumerate(mats)})

    @staticmethod
    def from_words(alphabet_size: int, words: Sequence[StarMonomial], alphas: Sequence[complex]) -> "NcPolynomial":
        terms: Dict[StarMonomial, complex] = {}
        for w, a in zip(words, alphas):
            terms[w] = terms.get(w, 0.0) + complex(a)
        return NcPolynomial.from_scalar_terms(alphabet_size, terms)

    # -- algebra ---------------------------------------------------------------

    def _check_compatible(self, other: "NcPolynomial") -> None:
        if self.alphabet_size != other.alphabet_size:
            raise SpecError("alphabet sizes differ")
        if self.coefficient_dimension != other.coefficient_dimension:
            raise SpecError("mixed coefficient dimensions are rejected")

    def __add__(self, other: "NcPolynomial") -> "NcPolynomial":
        self._check_compatible(other)
        terms = {m: c.copy() for m, c in self.terms.items()}
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return NcPolynomial(self.alphabet_size, self.coefficient_dimension, terms)

    def __sub__(self, other: "NcPolynomial") -> "NcPolynomial":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "NcPolynomial":
        return NcPolynomial(
            self.alphabet_size,
            self.coefficient_dimension,
            {m: complex(scalar) * c for m, c in self.terms.items()},
        )

    def __neg__(self) -> "NcPolynomial":
        return (-1.0) * self

    def __mul__(self, other: "NcPolynomial") -> "NcPolynomial":
        self._check_compatible(other)
        terms: Dict[StarMonomial, np.ndarray] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                c = c1 @ c2
                terms[m] = terms.get(m, 0) + c
        return NcPolynomial(self.alphabet_size, self.coefficient_dimension, terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NcPolynomial):
            return NotImplemented
        if (self.alphabet_size, self.coefficient_dimension) != (
            other.alphabet_size,
            other.coefficient_dimension,
        ):
            return False
        if set(self.terms) != set(other.terms):
            return False
        return all(np.array_equal(self.terms[m], other.terms[m]) for m in self.terms)

    def degree(self) -> int:
        return max((m.degree for m in self.terms), default=0)

    def __str__(self):
        return format_polynomial(self)

    __repr__ = __str__


def adjoint(p: NcPolynomial) -> NcPolynomial:
    """Reverse every word, flip stars, conjugate-transpose coefficients."""
    return NcPolynomial(
        p.alphabet_size,
        p.coefficient_dimension,
        {m.adjoint(): c.conj().T for m, c in p.terms.items()},
    )


def hermitian_parts(p: NcPolynomial) -> Tuple[NcPolynomial, NcPolynomial]:
    """(Q, R) with P = Q + iR and Q, R self-adjoint as polynomials."""
    ps = adjoint(p)
    q = 0.5 * (p + ps)
    r = (-0.5j) * (p - ps)
    return q, r


def evaluate(p: NcPolynomial, matrices: Sequence[SquareMatrix], dimension: int | None = None) -> SquareMatrix:
    """Evaluate the polynomial on a tuple of N x N matrices.

    Starred letters evaluate to conjugate transposes; the result lives in
    dimension k*N, with the unit monomial mapping to coeff (x) identity.
    """
    if len(matrices) != p.alphabet_size:
        raise SpecError(
            f"need {p.alphabet_size} matrices, got {len(matrices)}"
        )
    if not matrices and dimension is None:
        raise SpecError("dimension required when the alphabet is empty")
    n = dimension if dimension is not None else matrices[0].dimension
    for m in matrices:
        if m.dimension != n:
            raise SpecError("all matrices must share one dimension")
    k = p.coefficient_dimension
    out = np.zeros((k * n, k * n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    for mono, coeff in p.terms.items():
        word_val = eye
        for letter in mono.letters:
            m = matrices[letter.index - 1].entries
            word_val = word_val @ (m.conj().T if letter.starred else m)
        if k == 1:
            out += coeff[0, 0] * word_val
        else:
            out += np.kron(coeff, word_val)
    return SquareMatrix(out)


def reduced_words(p: int, d: int, holomorphic: bool) -> List[StarMonomial]:
    """Words of length d whose adjacent letter indices differ.

    ``holomorphic=True`` yields star-free words (count p(p-1)^{d-1});
    otherwise all 2^d star patterns are attached (count p(p-1)^{d-1} 2^d).
    """
    if p < 1:
        raise SpecError("alphabet size must be >= 1")
    if d < 1:
        raise SpecError("degree must be >= 1")
    index_patterns: List[Tuple[int, ...]] = []

    def extend(prefix: Tuple[int, ...]):
        if len(prefix) == d:
            index_patterns.append(prefix)
            return
        for j in range(1, p + 1):
            if not prefix or prefix[-1] != j:
                extend(prefix + (j,))

    extend(())
    words: List[StarMonomial] = []
    for pattern in index_patterns:
        if holomorphic:
            words.append(StarMonomial(tuple(StarLetter(j) for j in pattern)))
        else:
            for stars in range(1 << d):
                letters = tuple(
                    StarLetter(j, bool((stars >> i) & 1)) for i, j in enumerate(pattern)
                )
                words.append(StarMonomial(letters))
    return words


def l2_coefficient_norm(alpha: Sequence[complex]) -> float:
    """Euclidean norm of a coefficient sequence."""
    return float(np.linalg.norm(np.asarray(list(alpha), dtype=complex)))


# -- text format ----------------------------------------------------------------
#
# polynomial := term (" + " term)*
# term       := coeff | coeff " * " word | word
# coeff      := "(re,im)"                                  k = 1
#             | "[(re,im),...;(re,im),...]"                rows ";", entries ","
# word       := "1" | letter (" " letter)* ;  letter := x<idx> with "'" for star

_LETTER_RE = re.compile(r"^x(\d+)('?)$")
_COMPLEX_RE = re.compile(r"^\(([^,()]+),([^,()]+)\)$")


def _format_complex(c: complex) -> str:
    return f"({c.real!r},{c.imag!r})"


def _format_coeff(c: np.ndarray) -> str:
    if c.shape == (1, 1):
        return _format_complex(complex(c[0, 0]))
    rows = [",".join(_format_complex(complex(v)) for v in row) for row in c]
    return "[" + ";".join(rows) + "]"


def _format_word(m: StarMonomial) -> str:
    return str(m)


def format_polynomial(p: NcPolynomial) -> str:
    """Canonical text form; round-trips exactly through parse_polynomial."""
    if not p.terms:
        return _format_coeff(np.zeros((p.coefficient_dimension, p.coefficient_dimension)))
    keys = sorted(
        p.terms,
        key=lambda m: (m.degree, tuple((l.index, l.starred) for l in m.letters)),
    )
    parts = []
    for m in keys:
        coeff = _format_coeff(p.terms[m])
        parts.append(coeff if m.degree == 0 else f"{coeff} * {_format_word(m)}")
    return " + ".join(parts)


def _parse_complex(text: str) -> complex:
    match = _COMPLEX_RE.match(text.strip())
    if not match:
        raise SpecError(f"bad complex literal: {text!r}")
    return complex(float(match.group(1)), float(match.group(2)))


def _parse_coeff(text: str) -> np.ndarray:
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise SpecError(f"bad matrix coefficient: {text!r}")
        rows = []
        for row_text in text[1:-1].split(";"):
            entries = re.findall(r"\([^()]*\)", row_text)
            if not entries:
                raise SpecError(f"bad matrix row: {row_text!r}")
            rows.append([_parse_complex(e) for e in entries])
        mat = np.array(rows, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise SpecError("matrix coefficient must be square")
        return mat
    return np.array([[_parse_complex(text)]], dtype=complex)


def _parse_word(text: str) -> StarMonomial:
    text = text.strip()
    if text == "1":
        return StarMonomial()
    letters = []
    for token in text.split():
        match = _LETTER_RE.match(token)
        if not match:
            raise SpecError(f"bad letter: {token!r}")
        letters.append(StarLetter(int(match.group(1)), match.group(2) == "'"))
    if not letters:
        raise SpecError("empty word text")
    return StarMonomial(tuple(letters))


def parse_polynomial(text: str, alphabet_size: int | None = None) -> NcPolynomial:
    """Parse the documented text format.

    The alphabet size defaults to the largest letter index present.
    """
    staged: List[Tuple[StarMonomial, np.ndarray | None]] = []
    k = None
    for part in text.split(" + "):
        part = part.strip()
        if not part:
            raise SpecError("empty term")
        if " * " in part:
            coeff_text, word_text = part.split(" * ", 1)
            coeff = _parse_coeff(coeff_text)
            mono = _parse_word(word_text)
        elif part.startswith("(") or part.startswith("["):
            coeff = _parse_coeff(part)
            mono = StarMonomial()
        else:
            mono = _parse_word(part)
            coeff = None  # implicit unit coefficient, dimension fixed below
        if coeff is not None:
            if k is None:
                k = coeff.shape[0]
            elif coeff.shape[0] != k:
                raise SpecError("mixed coefficient dimensions are rejected")
        staged.append((mono, coeff))
    k = k or 1
    terms: Dict[StarMonomial, np.ndarray] = {}
    for mono, coeff in staged:
        value = coeff if coeff is not None else np.eye(k, dtype=complex)
        if value.shape != (k, k):
            raise SpecError("mixed coefficient dimensions are rejected")
        terms[mono] = terms.get(mono, 0) + value
    size = alphabet_size or max((m.max_index() for m in terms), default=1)
    return NcPolynomial(max(size, 1), k, terms)
