"""Zero-error code verification and the explicit product-basis codes.

A d-dimensional code is given by d orthonormal vectors.  It is exact for a
channel with graph L iff every A in (any spanning set of) L has vanishing
off-diagonal matrix elements between code vectors and a constant diagonal;
``verify_code`` measures both maxima over a Hermitian orthonormal basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .matcore import Angle, as_vector, vector_from_json, vector_to_json
from .opsys import OperatorSystem, product_pair_coeffs

DEFAULT_CODE_TOL = 1e-9


class CodeCandidate:
    """d orthonormal vectors in C^n, validated at construction."""

    def __init__(self, vectors, *, atol: float = 1e-12):
        vs = [as_vector(v) for v in vectors]
        if not vs:
            raise InvalidInput("a code needs at least one vector")
        n = vs[0].shape[0]
        for v in vs:
            if v.shape != (n,):
                raise DimensionMismatch("code vectors must share one ambient dimension")
        for i, v in enumerate(vs):
            if abs(np.linalg.norm(v) - 1.0) > atol:
                raise InvalidInput(f"vector {i} is not unit (|norm-1| > {atol})")
            for j in range(i):
                overlap = abs(np.vdot(vs[j], v))
                if overlap > atol:
                    raise InvalidInput(f"vectors {j},{i} overlap: {overlap:.2e}")
        self.vectors = tuple(vs)
        self.ambient_dim = int(n)

    def __len__(self) -> int:
        return len(self.vectors)

    def to_json(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "vectors": [vector_to_json(v) for v in self.vectors],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CodeCandidate":
        code = cls([vector_from_json(v) for v in obj["vectors"]])
        if code.ambient_dim != int(obj["ambient_dim"]):
            raise DimensionMismatch("ambient_dim does not match vectors")
        return code

    def __repr__(self) -> str:
        return f"CodeCandidate(d={len(self)}, ambient={self.ambient_dim})"


@dataclass(frozen=True)
class KLReport:
    """Maxima of the two code conditions over a Hermitian orthonormal basis."""

    max_offdiag: float
    max_diag_spread: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_offdiag < self.tol and self.max_diag_spread < self.tol

    def as_dict(self) -> dict:
        return {
            "max_offdiag": self.max_offdiag,
            "max_diag_spread": self.max_diag_spread,
            "tol": self.tol,
            "pass": self.passed,
        }


def pair_table(system: OperatorSystem, vectors) -> np.ndarray:
    """All <v_a|A_m|v_b> over the system's ortho basis, shape (m, d, d).

    Product systems are contracted factor by factor, so this works even when
    the product basis is never materialized.
    """
    vs = [as_vector(v) for v in vectors]
    d = len(vs)
    if system.factors is not None:
        stacks = system.ortho_stacks
        m = int(np.prod([s.shape[0] for s in stacks]))
        table = np.empty((m, d, d), dtype=np.complex128)
        for a in range(d):
            for b in range(d):
                table[:, a, b] = product_pair_coeffs(stacks, vs[a], vs[b])
        return table
    basis = np.stack(system.ortho_basis)
    v = np.stack(vs)
    return np.einsum("mij,ai,bj->mab", basis, v.conj(), v)


def verify_code(system: OperatorSystem, code: CodeCandidate, tol: float = DEFAULT_CODE_TOL) -> KLReport:
    """Check the exact error-correction conditions for ``code`` against ``system``.

    Off-diagonal: <v_l|A|v_k> = 0 for all k != l; diagonal: all <v_k|A|v_k>
    agree (checked against vector 0, which is equivalent by transitivity).
    Linearity in A makes the orthonormal Hermitian basis sufficient.
    """
    if code.ambient_dim != system.ambient_dim:
        raise DimensionMismatch(
            f"code on C^{code.ambient_dim}, system on C^{system.ambient_dim}"
        )
    table = pair_table(system, code.vectors)
    d = len(code)
    if d == 1:
        return KLReport(0.0, 0.0, tol)
    off = max(
        float(np.abs(table[:, a, b]).max()) for a in range(d) for b in range(d) if a != b
    )
    diags = table[:, range(d), range(d)].real
    spread = float(np.abs(diags[:, 1:] - diags[:, :1]).max())
    return KLReport(off, spread, tol)


def theorem_B_code(n: int) -> CodeCandidate:
    """The 2-D code spanned by (|1..1> + i|2..2>)/sqrt2 and (|3..3> + i|4..4>)/sqrt2.

    Lives on the n-fold product of C^4 in the canonical product basis.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    dim = 4**n
    rep = (dim - 1) // 3  # index of |2...2>, i.e. digits all equal to 1
    phi = np.zeros(dim, dtype=np.complex128)
    psi = np.zeros(dim, dtype=np.complex128)
    phi[0] = 1 / np.sqrt(2)
    phi[rep] = 1j / np.sqrt(2)
    psi[2 * rep] = 1 / np.sqrt(2)
    psi[3 * rep] = 1j / np.sqrt(2)
    return CodeCandidate([phi, psi])


def pairing_value(thetas, g_coeffs) -> complex:
    """Closed form (1/2) g_1...g_n (1 + gamma_1...gamma_n).

    Equals <psi|M_1 x ... x M_n|phi> for the theorem_B_code pair whenever
    M_k has g-coordinate g_k, independently of the other coordinates; it is
    exactly 0 when the angles sum to pi mod 2*pi.
    """
    thetas = list(thetas)
    g_coeffs = list(g_coeffs)
    if len(thetas) != len(g_coeffs):
        raise DimensionMismatch("need one g coefficient per angle")
    g_prod = complex(np.prod([complex(g) for g in g_coeffs])) if g_coeffs else 1.0
    gamma_prod = complex(np.prod([t.gamma for t in thetas])) if thetas else 1.0
    return 0.5 * g_prod * (1.0 + gamma_prod)


# -- distance from 0 to the numerical-range polygon ---------------------------


def _convex_hull(points: np.ndarray) -> list[np.ndarray]:
    """Andrew monotone chain; returns CCW vertices (2 endpoints if collinear)."""
    uniq = sorted({(float(x), float(y)) for x, y in points})
    if len(uniq) <= 2:
        return [np.array(p) for p in uniq]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return [np.array(p) for p in lower[:-1] + upper[:-1]]


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-30:
        return float(np.linalg.norm(p - a))
    t = np.clip(float((p - a) @ ab) / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def hull_distance(theta1: Angle, theta2: Angle, conj2: bool = False) -> float:
    """Euclidean distance from 0 to conv{1, g2, g1, g1*g2} in the plane.

    With g1 = exp(i*theta1) and g2 = exp(+-i*theta2) these are the
    eigenvalues of the diagonal product unitary, so the result equals
    min over unit y of |<y| U x V |y>|.
    """
    g1 = theta1.gamma
    g2 = np.conj(theta2.gamma) if conj2 else theta2.gamma
    zs = (1 + 0j, g2, g1, g1 * g2)
    pts = np.array([[z.real, z.imag] for z in zs])
    hull = _convex_hull(pts)
    origin = np.zeros(2)
    if len(hull) == 1:
        return float(np.linalg.norm(hull[0]))
    edge_min = min(
        _segment_distance(origin, hull[i], hull[(i + 1) % len(hull)])
        for i in range(len(hull))
    )
    if len(hull) >= 3:
        signs = []
        for i in range(len(hull)):
            a = hull[i]
            b = hull[(i + 1) % len(hull)]
            signs.append((b[0] - a[0]) * (-a[1]) - (b[1] - a[1]) * (-a[0]))
        if min(signs) >= -1e-15:
            return 0.0
    return float(edge_min)
