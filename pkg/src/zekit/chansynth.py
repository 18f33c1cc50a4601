"""Channels with a prescribed noncommutative graph.

``graph_of`` extracts the operator system spanned by {V_k* V_l} from a
channel's Kraus operators.  ``synthesize`` goes the other way: given a
validated operator system L of dimension m it builds a block Gram matrix
G = [B_ij] with d_E = ceil(sqrt(m)) blocks, every B_ij in L, B_ji = B_ij*,
sum_i B_ii = I and G >= 0, then factors G = W*W and slices W into Kraus
blocks so that V_i* V_j = B_ij.  The block set is chosen to span all of L,
which makes the resulting graph equal to L by construction.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DimensionMismatch, InvalidInput, SynthesisFailed
from .matcore import (
    as_matrix,
    dagger,
    herm_eig_min,
    kron,
    matrix_from_json,
    matrix_to_json,
    stack_rank,
)
from .opsys import OperatorSystem

TP_TOL = 1e-9
GRAPH_TOL = 1e-8
DEFAULT_ETA = 1 / 8
DEFAULT_EPS = 1 / 16


class Channel:
    """A channel as a list of d_B x d_A Kraus operators."""

    def __init__(self, kraus, d_A: int | None = None, d_B: int | None = None, *, meta=None):
        ops = [as_matrix(k) for k in kraus]
        if not ops:
            raise InvalidInput("a channel needs at least one Kraus operator")
        rows, cols = ops[0].shape
        for k in ops:
            if k.shape != (rows, cols):
                raise DimensionMismatch("Kraus operators must share one shape")
        self.kraus = ops
        self.d_A = int(d_A if d_A is not None else cols)
        self.d_B = int(d_B if d_B is not None else rows)
        if (rows, cols) != (self.d_B, self.d_A):
            raise DimensionMismatch("d_A/d_B do not match the Kraus operator shape")
        res = self.tp_residual
        if res > TP_TOL:
            raise InvalidInput(f"not trace preserving: |sum V*V - I| = {res:.3e}")
        self.meta = dict(meta or {})

    @property
    def tp_residual(self) -> float:
        acc = sum(dagger(k) @ k for k in self.kraus)
        return float(np.abs(acc - np.eye(self.d_A)).max())

    @property
    def choi_rank(self) -> int:
        """Number of linearly independent Kraus operators (= d_E here)."""
        return stack_rank(self.kraus)

    def to_json(self) -> dict:
        return {
            "d_A": self.d_A,
            "d_B": self.d_B,
            "kraus": [matrix_to_json(k) for k in self.kraus],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        return cls(
            [matrix_from_json(k) for k in obj["kraus"]],
            d_A=int(obj["d_A"]),
            d_B=int(obj["d_B"]),
        )

    def __repr__(self) -> str:
        return (
            f"Channel(d_A={self.d_A}, d_B={self.d_B}, kraus={len(self.kraus)})"
        )


def graph_of(phi: Channel) -> OperatorSystem:
    """Operator system spanned by all V_k* V_l (the channel's graph)."""
    basis = [dagger(a) @ b for a in phi.kraus for b in phi.kraus]
    return OperatorSystem(basis, label="graph")


def _blocks_for(ortho, d_E, eta, eps):
    """Diagonal blocks I/d_E + eta*H_i with sum H_i = 0, off-diagonal blocks
    eps * (A_p + i A_q) walking the remaining basis two at a time."""
    n = ortho[0].shape[0]
    eye = np.eye(n, dtype=np.complex128)
    hermitians = ortho[1:d_E]
    hs = list(hermitians)
    if d_E >= 1:
        hs.append(-sum(hermitians) if hermitians else np.zeros_like(eye))
    blocks = {}
    for i in range(d_E):
        blocks[(i, i)] = eye / d_E + eta * hs[i]
    rest = list(ortho[d_E:])
    pos = 0
    for i in range(d_E):
        for j in range(i + 1, d_E):
            take = rest[pos : pos + 2]
            pos += len(take)
            if len(take) == 2:
                blocks[(i, j)] = eps * (take[0] + 1j * take[1])
            elif len(take) == 1:
                blocks[(i, j)] = eps * take[0]
            else:
                blocks[(i, j)] = np.zeros_like(eye)
    return blocks


def synthesize(
    system: OperatorSystem,
    eta: float = DEFAULT_ETA,
    eps: float = DEFAULT_EPS,
    *,
    max_halvings: int = 20,
) -> Channel:
    """Build a channel whose graph equals ``system``.

    d_A = ambient dimension, d_E = ceil(sqrt(dim)) Kraus operators,
    d_B = rank of the block Gram matrix.  (eta, eps) control the size of
    the Hermitian diagonal perturbations and the off-diagonal blocks; they
    are halved automatically (up to ``max_halvings`` times) if positivity
    or the span contract fails.
    """
    if not system.is_valid:
        raise InvalidInput(f"system failed validation: {system.verdict!r}")
    if not (0 < eta <= 0.25 and 0 < eps <= 0.25):
        raise InvalidInput("eta and eps must lie in (0, 1/4]")
    m = system.dim
    n = system.ambient_dim
    d_E = int(np.ceil(np.sqrt(m)))
    ortho = system.ortho_basis
    eye = np.eye(n, dtype=np.complex128)
    if np.abs(ortho[0] - eye / np.linalg.norm(eye)).max() > 1e-10:
        raise SynthesisFailed("ortho basis does not start with the normalized identity")

    failure = "unknown"
    for _ in range(max_halvings + 1):
        blocks = _blocks_for(ortho, d_E, eta, eps)
        gram = np.zeros((d_E * n, d_E * n), dtype=np.complex128)
        for (i, j), b in blocks.items():
            gram[i * n : (i + 1) * n, j * n : (j + 1) * n] = b
            if i != j:
                gram[j * n : (j + 1) * n, i * n : (i + 1) * n] = dagger(b)

        all_blocks = list(blocks.values()) + [
            dagger(b) for (i, j), b in blocks.items() if i != j
        ]
        if stack_rank(all_blocks) != m:
            failure = f"block set spans {stack_rank(all_blocks)} of {m} dimensions"
            eta, eps = eta / 2, eps / 2
            continue
        min_eig = herm_eig_min(gram)
        if min_eig < -1e-10:
            failure = f"Gram matrix not PSD (min eigenvalue {min_eig:.3e})"
            eta, eps = eta / 2, eps / 2
            continue

        evals, evecs = np.linalg.eigh(gram)
        evals = np.where((evals > -1e-12) & (evals < 0), 0.0, evals)
        keep = evals > 1e-12 * max(evals.max(), 1e-300)
        w = (np.sqrt(evals[keep])[:, None] * dagger(evecs[:, keep]))
        kraus = [w[:, i * n : (i + 1) * n] for i in range(d_E)]

        channel = Channel(kraus, d_A=n, d_B=int(np.count_nonzero(keep)),
                          meta={"eta": eta, "eps": eps})
        if channel.choi_rank != d_E:
            failure = f"Kraus operators not independent (rank {channel.choi_rank} != {d_E})"
            eta, eps = eta / 2, eps / 2
            continue
        graph = graph_of(channel)
        forward = max(system.membership(b) for b in graph.basis)
        backward = max(graph.membership(b) for b in system.basis)
        if max(forward, backward) > GRAPH_TOL:
            failure = f"graph mismatch (residuals {forward:.2e}/{backward:.2e})"
            eta, eps = eta / 2, eps / 2
            continue
        channel.meta["graph_residual"] = max(forward, backward)
        return channel
    raise SynthesisFailed(f"halved (eta, eps) {max_halvings} times; last failure: {failure}")


def tensor_channels(channels) -> Channel:
    """Kronecker product channel: all products of one Kraus operator per factor."""
    channels = list(channels)
    if not channels:
        raise InvalidInput("need at least one channel")
    kraus = [
        _kron_all(combo)
        for combo in itertools.product(*[c.kraus for c in channels])
    ]
    d_A = int(np.prod([c.d_A for c in channels]))
    d_B = int(np.prod([c.d_B for c in channels]))
    return Channel(kraus, d_A=d_A, d_B=d_B)


def _kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out
