"""Feasibility search for zero-error codes, and the structured zero-pair solver.

The feasibility objective for a frame of orthonormal vectors {v_0..v_{d-1}}
and a Hermitian orthonormal basis {A_m} of an operator system is

    F = sum_{a<b, m} |<v_a|A_m|v_b>|^2
      + sum_{k>=1, m} (<v_k|A_m|v_k> - <v_0|A_m|v_0>)^2.

F vanishes exactly when the frame spans an error-correcting code.  The
search runs all restarts in lockstep as one batched retracted gradient
descent with Armijo backtracking, so a report is a deterministic function
of (seed, restarts).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, HypothesisNotMet, InvalidInput, NotUnit
from .klcodes import CodeCandidate
from .matcore import Angle, as_matrix, as_vector
from .opsys import OperatorSystem

DEFAULT_SEARCH_TOL = 1e-18
ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 60
MIN_STEP = 1e-15


# -- objective ----------------------------------------------------------------


def _stacked_basis(system: OperatorSystem) -> np.ndarray:
    if not system.is_valid:
        raise InvalidInput(f"system failed validation: {system.verdict!r}")
    return np.stack(system.ortho_basis)


def _tables(basis: np.ndarray, frames: np.ndarray):
    """Y[r,m,:,k] = A_m v_k and S[r,m,a,b] = <v_a|A_m|v_b> for batched frames."""
    y = np.matmul(basis[None, :, :, :], frames[:, None, :, :])
    s = np.matmul(np.conj(np.swapaxes(frames, 1, 2))[:, None, :, :], y)
    return s, y


def _objective_from_tables(s: np.ndarray) -> np.ndarray:
    d = s.shape[-1]
    iu, ju = np.triu_indices(d, 1)
    off = np.sum(np.abs(s[:, :, iu, ju]) ** 2, axis=(1, 2)) if iu.size else 0.0
    diags = np.real(s[:, :, np.arange(d), np.arange(d)])
    spread = np.sum((diags[:, :, 1:] - diags[:, :, :1]) ** 2, axis=(1, 2))
    return off + spread


def _gradient_from_tables(s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Real gradient of F with respect to the frame columns."""
    d = s.shape[-1]
    coeff = np.conj(s)
    diags = np.real(s[:, :, np.arange(d), np.arange(d)])
    dif = diags - diags[:, :, :1]
    cd = 2.0 * dif
    cd[:, :, 0] = -2.0 * dif.sum(axis=2)
    coeff[:, :, np.arange(d), np.arange(d)] = cd
    return 2.0 * np.einsum("rmjk,rmik->rij", coeff, y)


def frame_objective(system: OperatorSystem, vectors) -> float:
    """F evaluated on a list of unit vectors (d >= 1)."""
    basis = _stacked_basis(system)
    frame = np.stack([as_vector(v) for v in vectors], axis=1)[None, :, :]
    s, _ = _tables(basis, frame)
    return float(_objective_from_tables(s)[0])


def objective(system: OperatorSystem, phi, psi) -> float:
    """Feasibility objective for a pair of unit vectors (not necessarily orthogonal)."""
    phi = as_vector(phi)
    psi = as_vector(psi)
    n = system.ambient_dim
    if phi.shape != (n,) or psi.shape != (n,):
        raise DimensionMismatch(f"vectors must live on C^{n}")
    for v in (phi, psi):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise NotUnit("objective expects unit vectors")
    return frame_objective(system, [phi, psi])


def code_objective(system: OperatorSystem, code: CodeCandidate) -> float:
    if code.ambient_dim != system.ambient_dim:
        raise DimensionMismatch("code and system dimensions differ")
    return frame_objective(system, code.vectors)


# -- multistart search --------------------------------------------------------


@dataclass(frozen=True)
class RestartStat:
    objective: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FeasibilityReport:
    objective_min: float
    certificate: CodeCandidate
    restarts: int
    iterations_total: int
    seed: int
    converged_at_tol: bool
    tol: float
    code_dim: int
    per_restart: tuple[RestartStat, ...] = field(repr=False, default=())

    def as_dict(self) -> dict:
        return {
            "objective_min": self.objective_min,
            "restarts": self.restarts,
            "iterations_total": self.iterations_total,
            "seed": self.seed,
            "converged_at_tol": self.converged_at_tol,
            "tol": self.tol,
            "code_dim": self.code_dim,
        }


def _retract(frames: np.ndarray) -> np.ndarray:
    """Orthonormalize frame columns in order (Gram-Schmidt, then normalize)."""
    out = frames.copy()
    d = out.shape[2]
    for j in range(d):
        for k in range(j):
            proj = np.sum(np.conj(out[:, :, k]) * out[:, :, j], axis=1, keepdims=True)
            out[:, :, j] -= proj * out[:, :, k]
        norm = np.linalg.norm(out[:, :, j], axis=1, keepdims=True)
        out[:, :, j] /= np.maximum(norm, 1e-300)
    return out


def _initial_frames(seed: int, restarts: int, n: int, d: int) -> np.ndarray:
    frames = np.empty((restarts, n, d), dtype=np.complex128)
    for r in range(restarts):
        gen = np.random.Generator(
            np.random.Philox(key=np.array([seed, r], dtype=np.uint64))
        )
        frames[r] = gen.standard_normal((n, d)) + 1j * gen.standard_normal((n, d))
    return _retract(frames)


def search_pair(
    system: OperatorSystem,
    restarts: int = 16,
    seed: int = 0,
    tol: float = DEFAULT_SEARCH_TOL,
    *,
    code_dim: int = 2,
    max_iters: int = 5000,
    stall_window: int = 50,
    stall_rel: float = 1e-14,
    init_step: float = 8.0,
) -> FeasibilityReport:
    """Multistart minimization of the feasibility objective.

    All restarts advance in lockstep; each stops when F < tol, when the
    relative decrease over ``stall_window`` iterations falls below
    ``stall_rel``, or at ``max_iters``.  The returned minimum is the best
    restart, ties broken by the lowest restart index.  ``init_step`` is
    deliberately generous: descent is monotone, so early long steps only
    widen the set of starts that drop below shallow local minima.
    """
    if restarts < 1:
        raise InvalidInput("restarts must be >= 1")
    if code_dim < 2:
        raise InvalidInput("code_dim must be >= 2")
    basis = _stacked_basis(system)
    n = system.ambient_dim
    if code_dim > n:
        raise InvalidInput(f"cannot fit {code_dim} orthonormal vectors in C^{n}")

    frames = _initial_frames(seed, restarts, n, code_dim)
    s, y = _tables(basis, frames)
    f_val = _objective_from_tables(s)

    steps = np.full(restarts, float(init_step))
    iters = np.zeros(restarts, dtype=int)
    active = f_val >= tol
    history = np.full((restarts, stall_window), np.inf)
    history[:, 0] = f_val

    it = 0
    while active.any() and it < max_iters:
        it += 1
        idx = np.flatnonzero(active)
        fr = frames[idx]
        s_a, y_a = _tables(basis, fr)
        grad = _gradient_from_tables(s_a, y_a)
        rad = np.real(np.sum(np.conj(fr) * grad, axis=1, keepdims=True))
        grad -= fr * rad
        gnorm2 = np.sum(np.abs(grad) ** 2, axis=(1, 2))

        t_loc = steps[idx].copy()
        f_old = f_val[idx]
        new_frames = fr.copy()
        new_f = f_old.copy()
        accepted = np.zeros(len(idx), dtype=bool)
        remaining = np.arange(len(idx))
        for _ in range(MAX_BACKTRACKS):
            cand = _retract(fr[remaining] - t_loc[remaining, None, None] * grad[remaining])
            s_c, _ = _tables(basis, cand)
            f_c = _objective_from_tables(s_c)
            good = f_c <= f_old[remaining] - ARMIJO_C1 * t_loc[remaining] * gnorm2[remaining]
            hit = remaining[good]
            new_frames[hit] = cand[good]
            new_f[hit] = f_c[good]
            accepted[hit] = True
            remaining = remaining[~good]
            if remaining.size == 0:
                break
            t_loc[remaining] /= 2.0
            if (t_loc[remaining] < MIN_STEP).all():
                break

        frames[idx] = new_frames
        f_val[idx] = new_f
        steps[idx] = np.where(accepted, np.minimum(t_loc * 2.0, 1e6), t_loc)
        iters[idx] += 1

        # ring buffer: slot it % W was last written exactly stall_window
        # iterations ago, so reading before writing gives F(it - 50)
        slot = it % stall_window
        converged = new_f < tol
        stalled = ~accepted
        if it >= stall_window:
            past = history[idx, slot]
            rel = (past - new_f) / np.maximum(past, 1e-300)
            stalled |= rel < stall_rel
        history[idx, slot] = new_f
        active[idx[converged | stalled]] = False

    best = int(np.argmin(f_val))
    certificate = CodeCandidate(list(frames[best].T))
    stats = tuple(
        RestartStat(float(f_val[r]), int(iters[r]), bool(f_val[r] < tol))
        for r in range(restarts)
    )
    return FeasibilityReport(
        objective_min=float(f_val[best]),
        certificate=certificate,
        restarts=restarts,
        iterations_total=int(iters.sum()),
        seed=seed,
        converged_at_tol=bool(f_val[best] < tol),
        tol=tol,
        code_dim=code_dim,
        per_restart=stats,
    )


def calibration_threshold(baseline: FeasibilityReport, factor: float = 100.0) -> float:
    """Threshold above which a search floor counts as genuinely positive.

    100x the largest objective reached by a *converged* restart of the
    feasible baseline; falls back to 100x the tolerance if none converged.
    """
    converged = [st.objective for st in baseline.per_restart if st.converged]
    base = max(converged) if converged else baseline.tol
    return factor * max(base, 1e-300)


# -- structured zero-pair solver ------------------------------------------------


@dataclass(frozen=True)
class ZeroPairSolution:
    """One of the five structural families of left/right vector pairs."""

    form_id: int
    s: int | None
    t: int | None
    mu1: complex
    mu2: complex
    parameters: dict
    z1_basis: tuple = field(repr=False, default=())
    z4: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class ZeroPairResult:
    p_values: np.ndarray
    vanishing: tuple[int, ...]  # 0-based indices into p_values
    nullspace: np.ndarray  # (4, k) columns spanning admissible left vectors
    solutions: tuple[ZeroPairSolution, ...]
    w_matrix: np.ndarray
    s_matrix: np.ndarray


_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

# vanishing pair of p's (0-based) -> (form 1-3, sign s)
_PAIR_FORMS = {
    (0, 1): (1, 1),
    (2, 3): (1, -1),
    (0, 2): (2, 1),
    (1, 3): (2, -1),
    (0, 3): (3, 1),
    (1, 2): (3, -1),
}


def zero_pair_matrices(theta1: Angle, theta2: Angle, z_right, conj2: bool = False):
    """The linear system W |z1> = 0 for <z4|U_k x V_l|z1> = 0, plus the
    similarity S with S^-1 W S = diag(p_1..p_4)."""
    z4 = as_vector(z_right)
    if z4.shape != (4,):
        raise DimensionMismatch("right vector must live in C^4")
    g1 = theta1.gamma
    g2 = np.conj(theta2.gamma) if conj2 else theta2.gamma
    mu1 = theta1.half_root
    mu2 = np.conj(theta2.half_root) if conj2 else theta2.half_root
    a, b, c, d = np.conj(z4)
    w = np.array(
        [
            [a, g2 * b, g1 * c, g1 * g2 * d],
            [b, a, g1 * d, g1 * c],
            [c, g2 * d, a, g2 * b],
            [d, c, b, a],
        ],
        dtype=np.complex128,
    )
    cols = [np.kron([mu1, s], [mu2, t]) for s, t in _SIGNS]
    s_mat = np.stack(cols, axis=1)
    p = np.array(
        [a + t * mu2 * b + s * mu1 * c + s * t * mu1 * mu2 * d for s, t in _SIGNS],
        dtype=np.complex128,
    )
    return w, s_mat, p, mu1, mu2


def _fit_left_factor(z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """w such that z = u (x) w, assuming it exists."""
    m = z.reshape(2, 2)
    return np.conj(u) @ m / float(np.linalg.norm(u) ** 2)


def _fit_right_factor(z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """w such that z = w (x) u, assuming it exists."""
    m = z.reshape(2, 2)
    return m @ np.conj(u) / float(np.linalg.norm(u) ** 2)


def solve_zero_pair(
    theta1: Angle,
    theta2: Angle,
    z_right,
    conj2: bool = False,
    *,
    tol: float = 1e-10,
) -> ZeroPairResult:
    """Solution space of <z4|U_k x V_l|z1> = 0 (k,l = 1,2) for the left vector.

    The system diagonalizes as p_k u_k = 0 in the similarity basis, so the
    admissible left vectors are spanned by the similarity columns q_k with
    p_k = 0; the vanishing pattern classifies the pair into one of the five
    structural forms (two vanishing -> forms 1-3, one -> form 4, three ->
    form 5).  With ``conj2`` the second unitary is conjugated.
    """
    w, s_mat, p, mu1, mu2 = zero_pair_matrices(theta1, theta2, z_right, conj2)
    z4 = as_vector(z_right)
    scale = max(float(np.abs(np.conj(z4)).sum()), 1e-300)
    vanishing = tuple(int(k) for k in np.flatnonzero(np.abs(p) <= tol * scale))
    cols = [s_mat[:, k] / np.linalg.norm(s_mat[:, k]) for k in vanishing]
    nullspace = np.stack(cols, axis=1) if cols else np.zeros((4, 0), dtype=np.complex128)

    solutions: list[ZeroPairSolution] = []
    nv = len(vanishing)
    if nv == 2:
        form, s = _PAIR_FORMS[vanishing]
        params: dict = {}
        if form == 1:
            u = np.array([np.conj(mu1), -s])
            cd = _fit_left_factor(z4, u)
            params = {"c": complex(cd[0]), "d": complex(cd[1])}
        elif form == 2:
            u = np.array([np.conj(mu2), -s])
            cd = _fit_right_factor(z4, u)
            params = {"c": complex(cd[0]), "d": complex(cd[1])}
        else:
            v1 = np.kron([np.conj(mu1), 1], [np.conj(mu2), -s])
            v2 = np.kron([np.conj(mu1), -1], [np.conj(mu2), s])
            coeffs, *_ = np.linalg.lstsq(np.stack([v1, v2], axis=1), z4, rcond=None)
            params = {"c": complex(coeffs[0]), "d": complex(coeffs[1])}
        solutions.append(
            ZeroPairSolution(form, s, None, mu1, mu2, params, tuple(cols), z4)
        )
    elif nv == 1:
        k = vanishing[0]
        s, t = _SIGNS[k]
        cols_fit = [
            np.kron([np.conj(mu1), -s], [1, 0]),
            np.kron([np.conj(mu1), -s], [0, 1]),
            np.kron([1, 0], [np.conj(mu2), -t]),
            np.kron([0, 1], [np.conj(mu2), -t]),
        ]
        coeffs, *_ = np.linalg.lstsq(np.stack(cols_fit, axis=1), z4, rcond=None)
        params = {name: complex(v) for name, v in zip("abcd", coeffs)}
        solutions.append(
            ZeroPairSolution(4, s, t, mu1, mu2, params, tuple(cols), z4)
        )
    elif nv == 3:
        nonzero = next(k for k in range(4) if k not in vanishing)
        s, t = _SIGNS[nonzero]
        h = np.conj(p[nonzero] / (4 * mu1 * mu2))
        solutions.append(
            ZeroPairSolution(5, s, t, mu1, mu2, {"h": complex(h)}, tuple(cols), z4)
        )

    return ZeroPairResult(
        p_values=p,
        vanishing=vanishing,
        nullspace=nullspace,
        solutions=tuple(solutions),
        w_matrix=w,
        s_matrix=s_mat,
    )


# -- auxiliary-lemma oracles ----------------------------------------------------
#
# These check a lemma's hypothesis numerically and test its conclusion on
# instances constructed to satisfy the hypothesis; they exist for property
# tests, not for the search path.


@dataclass(frozen=True)
class SubspaceVerdict:
    subspace_dim: int
    rank_x: int
    rank_y: int
    zero_slot: bool

    @property
    def passes(self) -> bool:
        bound = 1 if self.zero_slot else 2
        return (
            self.subspace_dim <= bound
            and self.rank_x == self.rank_y
            and self.rank_x <= bound
        )


def parallel_rank_check(xs, ys, *, tol: float = 1e-8) -> SubspaceVerdict:
    """Oracle for: sum |y_i><x_i| = 0 and sum(|y_i><y_i| - |x_i><x_i|) = 0
    force all eight vectors into a 2-D subspace (1-D when some pair vanishes)."""
    xs = [as_vector(v) for v in xs]
    ys = [as_vector(v) for v in ys]
    if len(xs) != 4 or len(ys) != 4:
        raise DimensionMismatch("need four x and four y vectors")
    cross = sum(np.outer(y, np.conj(x)) for x, y in zip(xs, ys))
    gram_gap = sum(np.outer(y, np.conj(y)) for y in ys) - sum(
        np.outer(x, np.conj(x)) for x in xs
    )
    scale = max(max(np.linalg.norm(v) ** 2 for v in xs + ys), 1e-300)
    if np.abs(cross).max() > tol * scale or np.abs(gram_gap).max() > tol * scale:
        raise HypothesisNotMet("inputs do not satisfy the two operator equations")
    zero_slot = any(
        np.linalg.norm(x) < tol and np.linalg.norm(y) < tol for x, y in zip(xs, ys)
    )
    stacked = np.stack(xs + ys)
    sv = np.linalg.svd(stacked, compute_uv=False)
    dim = int(np.count_nonzero(sv > 1e-8 * max(sv[0], 1e-300)))
    gram_x = np.array([[np.vdot(a, b) for b in xs] for a in xs])
    gram_y = np.array([[np.vdot(a, b) for b in ys] for a in ys])

    def _rank(g):
        ev = np.linalg.eigvalsh(g)
        return int(np.count_nonzero(ev > 1e-8 * max(ev[-1], 1e-300)))

    return SubspaceVerdict(dim, _rank(gram_x), _rank(gram_y), zero_slot)


def al2_case(xs, ys, *, tol: float = 1e-8) -> int:
    """Classify which structural case explains X1xY1 + X2xY2 = X3xY3 + X4xY4
    for rank-one projectors X_i = |x_i><x_i|, Y_i = |y_i><y_i|."""
    xs = [as_vector(v) for v in xs]
    ys = [as_vector(v) for v in ys]
    big_x = [np.outer(v, np.conj(v)) for v in xs]
    big_y = [np.outer(v, np.conj(v)) for v in ys]
    lhs = np.kron(big_x[0], big_y[0]) + np.kron(big_x[1], big_y[1])
    rhs = np.kron(big_x[2], big_y[2]) + np.kron(big_x[3], big_y[3])
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    if np.abs(lhs - rhs).max() > tol * scale:
        raise HypothesisNotMet("tensor equality does not hold")

    def parallel(u, v):
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu < tol or nv < tol:
            return True
        return abs(np.vdot(u, v)) >= (1 - tol) * nu * nv

    def all_parallel(vs):
        return all(parallel(vs[i], vs[j]) for i in range(4) for j in range(i + 1, 4))

    def close(a, b):
        return np.abs(a - b).max() <= tol * max(np.abs(a).max(), np.abs(b).max(), 1e-300)

    n2 = [float(np.linalg.norm(v) ** 2) for v in xs]
    m2 = [float(np.linalg.norm(v) ** 2) for v in ys]
    if all_parallel(xs) and close(
        big_y[0] * n2[0] + big_y[1] * n2[1], big_y[2] * n2[2] + big_y[3] * n2[3]
    ):
        return 1
    if all_parallel(ys) and close(
        big_x[0] * m2[0] + big_x[1] * m2[1], big_x[2] * m2[2] + big_x[3] * m2[3]
    ):
        return 2
    if close(np.kron(big_x[0], big_y[0]), np.kron(big_x[3], big_y[3])) and close(
        np.kron(big_x[1], big_y[1]), np.kron(big_x[2], big_y[2])
    ):
        return 3
    if close(np.kron(big_x[0], big_y[0]), np.kron(big_x[2], big_y[2])) and close(
        np.kron(big_x[1], big_y[1]), np.kron(big_x[3], big_y[3])
    ):
        return 4
    raise InvalidInput("no structural case matched within tolerance")


@dataclass(frozen=True)
class FactorVerdict:
    d_factors_with_y: bool
    c_is_product: bool

    @property
    def passes(self) -> bool:
        return self.d_factors_with_y or self.c_is_product


def al3_factor(a, c, d, x, y, theta: Angle, *, tol: float = 1e-8) -> FactorVerdict:
    """Oracle for: <a|U x A|x(x)y> = <c|U x A|d> for all 2x2 A (U = diag(1, gamma))
    forces d = z (x) y or c to be a product vector."""
    a = as_vector(a)
    c = as_vector(c)
    d = as_vector(d)
    x = as_vector(x)
    y = as_vector(y)
    u1 = np.diag([1.0, theta.gamma]).astype(np.complex128)
    xy = np.kron(x, y)
    worst = 0.0
    scale = 1e-300
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=np.complex128)
            unit[i, j] = 1.0
            op = np.kron(u1, unit)
            lhs = np.vdot(a, op @ xy)
            rhs = np.vdot(c, op @ d)
            worst = max(worst, abs(lhs - rhs))
            scale = max(scale, abs(lhs), abs(rhs), 1.0)
    if worst > tol * scale:
        raise HypothesisNotMet("the matrix-element identity fails on matrix units")

    dm = d.reshape(2, 2)
    ny2 = float(np.linalg.norm(y) ** 2)
    w = dm @ np.conj(y) / ny2
    d_ok = np.abs(dm - np.outer(w, y)).max() <= tol * max(np.abs(dm).max(), 1e-300)
    sv = np.linalg.svd(c.reshape(2, 2), compute_uv=False)
    c_ok = sv[1] <= tol * max(sv[0], 1e-300)
    return FactorVerdict(bool(d_ok), bool(c_ok))
