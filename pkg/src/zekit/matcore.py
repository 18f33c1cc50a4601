"""Dense complex linear-algebra primitives shared by every other module.

Matrices and vectors are plain ``numpy.ndarray`` of ``complex128``; all
span computations vectorize matrices by row-major stacking (``reshape(-1)``),
which is fixed once here and relied on everywhere else.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotHermitian

DEFAULT_TOL = 1e-10

# Quadrant angles whose gamma is exactly representable; used so that e.g.
# gamma(pi) is -1 and not -1+1.2e-16j.
_EXACT_GAMMA = {
    Fraction(0): 1 + 0j,
    Fraction(1, 2): 1j,
    Fraction(1): -1 + 0j,
    Fraction(-1, 2): -1j,
}


@dataclass(frozen=True, order=False)
class Angle:
    """An angle theta = (numerator/denominator)*pi, kept as an exact fraction.

    The fraction is reduced and normalized into (-pi, pi], i.e.
    -denominator < numerator <= denominator.  Exact integer arithmetic makes
    conditions like theta1 + theta2 + theta3 = pi (mod 2*pi) decidable
    without any floating-point comparison.
    """

    numerator: int
    denominator: int = 1

    def __post_init__(self) -> None:
        frac = Fraction(self.numerator, self.denominator) % 2
        if frac > 1:
            frac -= 2
        object.__setattr__(self, "numerator", frac.numerator)
        object.__setattr__(self, "denominator", frac.denominator)

    @classmethod
    def from_fraction(cls, frac: Fraction) -> "Angle":
        return cls(frac.numerator, frac.denominator)

    @classmethod
    def parse(cls, text: str) -> "Angle":
        """Parse "p/q" or "p" (in units of pi), e.g. "1/3" -> pi/3."""
        return cls.from_fraction(Fraction(text.strip()))

    @classmethod
    def from_radians(cls, value: float, max_denominator: int = 10**6) -> "Angle":
        """Nearest exact angle to ``value`` radians (for irrational probes)."""
        return cls.from_fraction(Fraction(value / math.pi).limit_denominator(max_denominator))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    @property
    def radians(self) -> float:
        return self.numerator * math.pi / self.denominator

    @property
    def gamma(self) -> complex:
        """exp(i*theta), exact on quadrant angles."""
        exact = _EXACT_GAMMA.get(self.fraction)
        if exact is not None:
            return exact
        return cmath.exp(1j * self.radians)

    @property
    def half_root(self) -> complex:
        """exp(i*theta/2), the principal square root of gamma."""
        return cmath.exp(0.5j * self.radians)

    def __add__(self, other: "Angle") -> "Angle":
        return Angle.from_fraction(self.fraction + other.fraction)

    def __neg__(self) -> "Angle":
        return Angle.from_fraction(-self.fraction)

    def __sub__(self, other: "Angle") -> "Angle":
        return Angle.from_fraction(self.fraction - other.fraction)

    def __abs__(self) -> "Angle":
        return Angle.from_fraction(abs(self.fraction))

    def __str__(self) -> str:
        if self.denominator == 1:
            return str(self.numerator)
        return f"{self.numerator}/{self.denominator}"


PI = Angle(1, 1)


def angle_sum(angles) -> Angle:
    total = Fraction(0)
    for a in angles:
        total += a.fraction
    return Angle.from_fraction(total)


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={arr.ndim}")
    return arr


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got ndim={arr.ndim}")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def kron(a, b) -> np.ndarray:
    """Kronecker product under the identification A (x) B <-> [a_ij * B]."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats) -> np.ndarray:
    mats = list(mats)
    out = as_matrix(mats[0])
    for m in mats[1:]:
        out = np.kron(out, as_matrix(m))
    return out


def vec(m: np.ndarray) -> np.ndarray:
    """Row-major vectorization (the fixed convention for span computations)."""
    return np.asarray(m, dtype=np.complex128).reshape(-1)


def svd_rank(m, tol: float = DEFAULT_TOL) -> int:
    """Number of singular values above tol * (largest singular value)."""
    arr = as_matrix(m)
    if arr.size == 0:
        return 0
    sv = np.linalg.svd(arr, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def stack_rank(mats, tol: float = DEFAULT_TOL) -> int:
    """Dimension of the span of a list of same-shape matrices."""
    rows = np.stack([vec(m) for m in mats])
    return svd_rank(rows, tol)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.abs(m - dagger(m)).max()) if m.size else 0.0


def herm_eig_min(m, herm_tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Raises NotHermitian when the max entry deviation of M - M* exceeds
    ``herm_tol``.
    """
    arr = as_matrix(m)
    defect = hermiticity_defect(arr)
    if defect > herm_tol:
        raise NotHermitian(f"matrix is not Hermitian: max |M - M*| = {defect:.3e}")
    return float(np.linalg.eigvalsh(arr)[0])


# --- JSON encoding -----------------------------------------------------------
#
# A complex number is a two-element array [re, im]; a matrix is
# {"rows": n, "cols": m, "data": [[re, im], ...]} with data in row-major order.


def complex_to_json(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def matrix_to_json(m) -> dict:
    arr = as_matrix(m)
    rows, cols = arr.shape
    data = [complex_to_json(z) for z in arr.reshape(-1)]
    return {"rows": int(rows), "cols": int(cols), "data": data}


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = obj["data"]
    if len(data) != rows * cols:
        raise ValueError(f"matrix data length {len(data)} != {rows}x{cols}")
    flat = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return flat.reshape(rows, cols)


def vector_to_json(v) -> list:
    return [complex_to_json(z) for z in as_vector(v)]


def vector_from_json(obj) -> np.ndarray:
    return np.array([complex(re, im) for re, im in obj], dtype=np.complex128)
