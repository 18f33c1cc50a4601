"""Operator systems (noncommutative graphs).

An operator system here is a subspace of n x n complex matrices given by a
spanning list; the interesting family is the 8-dimensional subspace of M_4

        [ a   b   e    f  ]
        [ c   d   f   cg*e]          (cg = conjugate of gamma)
        [ g   h   a    b  ]
        [ h  g*gamma c  d  ]

parameterized by an angle theta with gamma = exp(i*theta).  Tensor products
of systems keep their factor structure so that large products (e.g. four
factors on C^256) never have to materialize a 4096-element basis: inner
products against the implicit product basis are computed factor by factor.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .matcore import (
    Angle,
    DEFAULT_TOL,
    as_matrix,
    as_vector,
    dagger,
    kron_all,
    matrix_from_json,
    matrix_to_json,
    svd_rank,
    vec,
)

# Largest dim * ambient_dim^2 (complex entries) for which a product system
# materializes its basis / ortho_basis on demand.
MATERIALIZE_BUDGET = 8_000_000

BASIS_LABELS = ("a", "b", "c", "d", "e", "f", "g", "h")


class SystemVerdict:
    """Outcome of validate_system; failures are fields, not exceptions."""

    __slots__ = ("dim", "identity_residual", "max_adjoint_residual", "inherited")

    def __init__(self, dim, identity_residual, max_adjoint_residual, inherited=False):
        self.dim = int(dim)
        self.identity_residual = float(identity_residual)
        self.max_adjoint_residual = float(max_adjoint_residual)
        self.inherited = bool(inherited)

    @property
    def contains_identity(self) -> bool:
        return self.identity_residual < DEFAULT_TOL

    @property
    def star_closed(self) -> bool:
        return self.max_adjoint_residual < DEFAULT_TOL

    @property
    def valid(self) -> bool:
        return self.contains_identity and self.star_closed

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "identity_residual": self.identity_residual,
            "max_adjoint_residual": self.max_adjoint_residual,
            "contains_identity": self.contains_identity,
            "star_closed": self.star_closed,
            "valid": self.valid,
        }

    def __repr__(self) -> str:
        return (
            f"SystemVerdict(dim={self.dim}, valid={self.valid}, "
            f"identity_residual={self.identity_residual:.2e}, "
            f"max_adjoint_residual={self.max_adjoint_residual:.2e})"
        )


class OperatorSystem:
    """Subspace of M_n given by a spanning list, immutable after construction.

    ``ortho_basis`` is a Hilbert-Schmidt-orthonormal *Hermitian* spanning
    list (exists exactly when the span is *-closed); it is what code
    verification and the search objective iterate over, because Hermitian
    probes have real diagonal expectations.  Products built by
    ``tensor_systems`` carry their factors and may leave the product basis
    implicit when it would be too large.
    """

    def __init__(self, basis, *, label: str | None = None):
        mats = [as_matrix(b) for b in basis]
        if not mats:
            raise InvalidInput("empty basis")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise DimensionMismatch("basis matrices must be square and same size")
        self.ambient_dim = int(n)
        self._basis: list[np.ndarray] | None = mats
        self.factors: tuple[OperatorSystem, ...] | None = None
        self.label = label
        self._cache: dict = {}

    @classmethod
    def _from_factors(cls, factors, label=None) -> "OperatorSystem":
        obj = cls.__new__(cls)
        obj.ambient_dim = int(np.prod([f.ambient_dim for f in factors]))
        obj._basis = None
        obj.factors = tuple(factors)
        obj.label = label
        obj._cache = {}
        return obj

    # -- structure ----------------------------------------------------------

    def _flat_factors(self) -> tuple:
        return self.factors if self.factors is not None else (self,)

    @property
    def dim(self) -> int:
        if "dim" not in self._cache:
            if self.factors is not None:
                self._cache["dim"] = int(np.prod([f.dim for f in self.factors]))
            else:
                rows = np.stack([vec(b) for b in self._basis])
                self._cache["dim"] = svd_rank(rows)
        return self._cache["dim"]

    @property
    def basis(self) -> list[np.ndarray]:
        """Spanning list; for products, all kron products of factor bases."""
        if self._basis is not None:
            return self._basis
        self._require_budget("basis")
        if "basis" not in self._cache:
            lists = [f.basis for f in self.factors]
            self._cache["basis"] = [kron_all(combo) for combo in itertools.product(*lists)]
        return self._cache["basis"]

    def _require_budget(self, what: str) -> None:
        cost = self.dim * self.ambient_dim**2
        if cost > MATERIALIZE_BUDGET:
            raise InvalidInput(
                f"refusing to materialize {what} of a {self.dim}-dim system on "
                f"C^{self.ambient_dim} ({cost} entries); use the factored operations"
            )

    # -- span machinery -----------------------------------------------------

    @property
    def _span_onb(self) -> np.ndarray:
        """Rows form a complex HS-orthonormal basis of the span."""
        if "span_onb" not in self._cache:
            rows = np.stack([vec(b) for b in self.basis])
            _, sv, vt = np.linalg.svd(rows, full_matrices=False)
            rank = int(np.count_nonzero(sv > DEFAULT_TOL * sv[0])) if sv.size else 0
            self._cache["span_onb"] = vt[:rank]
        return self._cache["span_onb"]

    @property
    def verdict(self) -> SystemVerdict:
        if "verdict" not in self._cache:
            if self.factors is not None:
                sub = [f.verdict for f in self.factors]
                self._cache["verdict"] = SystemVerdict(
                    dim=self.dim,
                    identity_residual=max(v.identity_residual for v in sub),
                    max_adjoint_residual=max(v.max_adjoint_residual for v in sub),
                    inherited=True,
                )
            else:
                eye = np.eye(self.ambient_dim, dtype=np.complex128)
                id_res = self._leaf_residual(eye)
                adj_res = max(self._leaf_residual(dagger(b)) for b in self._basis)
                self._cache["verdict"] = SystemVerdict(self.dim, id_res, adj_res)
        return self._cache["verdict"]

    @property
    def is_valid(self) -> bool:
        return self.verdict.valid

    def _leaf_residual(self, a: np.ndarray) -> float:
        # residual vector, not a norm difference: the latter loses all
        # precision near zero through cancellation
        v = vec(a)
        coeffs = self._span_onb.conj() @ v
        return float(np.linalg.norm(v - self._span_onb.T @ coeffs))

    def membership(self, a) -> float:
        """Hilbert-Schmidt distance from ``a`` to the span."""
        a = as_matrix(a)
        if a.shape != (self.ambient_dim, self.ambient_dim):
            raise DimensionMismatch(
                f"matrix is {a.shape}, system lives on C^{self.ambient_dim}"
            )
        if self.factors is not None:
            stacks = self.ortho_stacks
            coeffs = product_matrix_coeffs(stacks, a)
            recon = product_reconstruct(stacks, coeffs)
            return float(np.linalg.norm(a - recon))
        return self._leaf_residual(a)

    # -- Hermitian orthonormal basis ------------------------------------------

    @property
    def ortho_basis(self) -> list[np.ndarray]:
        if "ortho" not in self._cache:
            if not self.is_valid:
                raise InvalidInput("ortho_basis requires a validated (*-closed, unital) system")
            if self.factors is not None:
                self._require_budget("ortho_basis")
                lists = [f.ortho_basis for f in self.factors]
                self._cache["ortho"] = [
                    kron_all(combo) for combo in itertools.product(*lists)
                ]
            else:
                n = self.ambient_dim
                eye = np.eye(n, dtype=np.complex128)
                cands = [eye]
                for b in self._basis:
                    cands.append((b + dagger(b)) / 2)
                    cands.append((b - dagger(b)) / 2j)
                ortho = _hermitian_gram_schmidt(cands, n)
                if len(ortho) != self.dim:
                    raise InvalidInput(
                        f"Hermitian orthonormalization produced {len(ortho)} elements "
                        f"for a {self.dim}-dim span"
                    )
                self._cache["ortho"] = ortho
        return self._cache["ortho"]

    @property
    def ortho_stacks(self) -> list[np.ndarray]:
        """Per-factor stacked ortho bases, for factor-by-factor contractions."""
        if "stacks" not in self._cache:
            if self.factors is not None:
                stacks = []
                for f in self.factors:
                    stacks.extend(f.ortho_stacks)
                self._cache["stacks"] = stacks
            else:
                self._cache["stacks"] = [np.stack(self.ortho_basis)]
        return self._cache["stacks"]

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "basis": [matrix_to_json(b) for b in self.basis],
        }

    @classmethod
    def from_json(cls, obj: dict, label=None) -> "OperatorSystem":
        basis = [matrix_from_json(m) for m in obj["basis"]]
        sys = cls(basis, label=label)
        if sys.ambient_dim != int(obj["ambient_dim"]):
            raise DimensionMismatch("ambient_dim does not match basis shape")
        return sys

    def __repr__(self) -> str:
        tag = self.label or ("product" if self.factors else "system")
        return f"OperatorSystem({tag}, ambient={self.ambient_dim}, dim={self.dim})"


def _hermitian_gram_schmidt(cands, n, accept_tol=1e-8):
    """Gram-Schmidt (two-pass) over Hermitian candidates in the real HS space."""
    rows: list[np.ndarray] = []
    q = np.empty((0, 2 * n * n))
    for c in cands:
        r = np.concatenate([vec(c).real, vec(c).imag])
        orig = np.linalg.norm(r)
        if orig < 1e-14:
            continue
        v = r
        for _ in range(2):
            if q.shape[0]:
                v = v - q.T @ (q @ v)
        nv = np.linalg.norm(v)
        if nv > accept_tol * orig:
            v = v / nv
            rows.append(v)
            q = np.vstack([q, v])
    out = []
    for v in rows:
        m = (v[: n * n] + 1j * v[n * n :]).reshape(n, n)
        out.append((m + dagger(m)) / 2)
    return out


# -- factorized contractions --------------------------------------------------


def product_pair_coeffs(stacks, v, w) -> np.ndarray:
    """All <v| A_{k1} x ... x A_{kF} |w> over per-factor stacks, k row-major.

    ``stacks`` is a list of (m_f, n_f, n_f) arrays; v, w live on the product
    space.  Contracting one factor at a time keeps intermediates small even
    when the full product basis would be huge.
    """
    dims = [int(s.shape[1]) for s in stacks]
    rest = int(np.prod(dims))
    vc = np.conj(as_vector(v))
    w = as_vector(w)
    n0 = dims[0]
    rest //= n0
    a = np.einsum(
        "kab,aI,bJ->kIJ", stacks[0], vc.reshape(n0, rest), w.reshape(n0, rest)
    )
    for f in range(1, len(stacks)):
        nf = dims[f]
        rest //= nf
        k = a.shape[0]
        a = a.reshape(k, nf, rest, nf, rest)
        a = np.einsum("fab,KaIbJ->KfIJ", stacks[f], a)
        a = a.reshape(k * stacks[f].shape[0], rest, rest)
    return a.reshape(-1)


def product_matrix_coeffs(stacks, x) -> np.ndarray:
    """All HS coefficients <A_{k1} x ... x A_{kF}, X>, k row-major."""
    dims = [int(s.shape[1]) for s in stacks]
    nf_total = len(dims)
    t = as_matrix(x).reshape(dims + dims)
    perm = []
    for f in range(nf_total):
        perm += [f, nf_total + f]
    t = np.transpose(t, perm)
    rest = int(np.prod([d * d for d in dims]))
    a = t.reshape(1, rest)
    for f in range(nf_total):
        nf = dims[f]
        rest //= nf * nf
        k = a.shape[0]
        a = a.reshape(k, nf, nf, rest)
        a = np.einsum("fab,KabR->KfR", np.conj(stacks[f]), a)
        a = a.reshape(k * stacks[f].shape[0], rest)
    return a.reshape(-1)


def product_reconstruct(stacks, coeffs) -> np.ndarray:
    """Sum of coeffs[k1..kF] * (A_{k1} x ... x A_{kF}) without huge intermediates."""
    dims = [int(s.shape[1]) for s in stacks]
    ms = [int(s.shape[0]) for s in stacks]
    nf_total = len(dims)
    rest = int(np.prod(ms))
    a = np.asarray(coeffs, dtype=np.complex128).reshape(1, rest)
    for f in range(nf_total):
        mf = ms[f]
        nf = dims[f]
        rest //= mf
        p = a.shape[0]
        a = a.reshape(p, mf, rest)
        a = np.einsum("kab,PkR->PabR", stacks[f], a)
        a = a.reshape(p * nf * nf, rest)
    # interleaved (i1, j1, i2, j2, ...) back to (i1..iF, j1..jF)
    t = a.reshape([d for pair in dims for d in (pair, pair)])
    perm = [2 * f for f in range(nf_total)] + [2 * f + 1 for f in range(nf_total)]
    t = np.transpose(t, perm)
    n = int(np.prod(dims))
    return t.reshape(n, n)


# -- constructors and module-level operations ---------------------------------


def make_N_theta(theta: Angle) -> OperatorSystem:
    """The 8-dimensional operator system on C^4 for the given angle.

    Basis members are indexed in the fixed order (a, b, c, d, e, f, g, h):
    each sets one coordinate of the matrix pattern to 1 and the rest to 0.
    """
    gamma = theta.gamma
    n = 4
    basis = []
    slots = {
        "a": [((0, 0), 1), ((2, 2), 1)],
        "b": [((0, 1), 1), ((2, 3), 1)],
        "c": [((1, 0), 1), ((3, 2), 1)],
        "d": [((1, 1), 1), ((3, 3), 1)],
        "e": [((0, 2), 1), ((1, 3), np.conj(gamma))],
        "f": [((0, 3), 1), ((1, 2), 1)],
        "g": [((2, 0), 1), ((3, 1), gamma)],
        "h": [((2, 1), 1), ((3, 0), 1)],
    }
    for name in BASIS_LABELS:
        m = np.zeros((n, n), dtype=np.complex128)
        for (i, j), val in slots[name]:
            m[i, j] = val
        basis.append(m)
    return OperatorSystem(basis, label=f"N[{theta}]")


def validate_system(system: OperatorSystem) -> SystemVerdict:
    return system.verdict


def tensor_systems(l1: OperatorSystem, l2: OperatorSystem) -> OperatorSystem:
    """Tensor product of validated systems; basis = all pairwise kron products."""
    for l in (l1, l2):
        if not l.is_valid:
            raise InvalidInput(f"operand failed validation: {l.verdict!r}")
    factors = l1._flat_factors() + l2._flat_factors()
    label = "(x)".join(f.label or "?" for f in factors)
    return OperatorSystem._from_factors(factors, label=label)


def tensor_all(systems) -> OperatorSystem:
    systems = list(systems)
    out = systems[0]
    for s in systems[1:]:
        out = tensor_systems(out, s)
    return out


def membership(system: OperatorSystem, a) -> float:
    return system.membership(a)
