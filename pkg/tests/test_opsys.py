import numpy as np
import pytest

from zekit.errors import DimensionMismatch, InvalidInput
from zekit.matcore import Angle, PI, kron, stack_rank, vec
from zekit.opsys import (
    BASIS_LABELS,
    OperatorSystem,
    make_N_theta,
    membership,
    product_matrix_coeffs,
    product_pair_coeffs,
    tensor_all,
    tensor_systems,
    validate_system,
)

from conftest import random_complex

THETA_GRID = [Angle(1, 4), Angle(-1, 4), Angle(1, 2), Angle(-1, 2), PI]


def unit_matrix(n, i, j):
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1.0
    return m


class TestMakeNTheta:
    def test_g_member_at_pi(self):
        # with gamma = exp(i*pi) = -1 the g member has (3,1)=1 and (4,2)=-1
        # (1-based), all other entries 0
        sys_pi = make_N_theta(PI)
        g = sys_pi.basis[BASIS_LABELS.index("g")]
        expect = np.zeros((4, 4), dtype=complex)
        expect[2, 0] = 1.0
        expect[3, 1] = -1.0
        assert np.array_equal(g, expect)

    def test_g_adjoint_is_e_pattern_at_zero(self):
        sys0 = make_N_theta(Angle(0, 1))
        g = sys0.basis[BASIS_LABELS.index("g")]
        e = sys0.basis[BASIS_LABELS.index("e")]
        assert np.array_equal(g.conj().T, e)
        assert np.abs(g + g.conj().T - (g + g.conj().T).conj().T).max() == 0

    def test_star_closure_pairing_of_members(self):
        # adjoints permute the canonical members: a*=a, d*=d, b*<->c, e*<->g, f*<->h
        s = make_N_theta(Angle(1, 3))
        idx = {name: i for i, name in enumerate(BASIS_LABELS)}
        pairs = [("a", "a"), ("d", "d"), ("b", "c"), ("e", "g"), ("f", "h")]
        for x, y in pairs:
            assert (
                np.abs(s.basis[idx[x]].conj().T - s.basis[idx[y]]).max() < 1e-15
            ), (x, y)

    @pytest.mark.parametrize("theta", THETA_GRID + [Angle(1, 3), Angle(-1, 3)])
    def test_validates_with_dim_8(self, theta):
        verdict = validate_system(make_N_theta(theta))
        assert verdict.valid
        assert verdict.dim == 8
        assert verdict.identity_residual < 1e-10
        assert verdict.max_adjoint_residual < 1e-10

    @pytest.mark.parametrize("theta", THETA_GRID)
    def test_identity_is_a_plus_d(self, theta):
        s = make_N_theta(theta)
        a = s.basis[BASIS_LABELS.index("a")]
        d = s.basis[BASIS_LABELS.index("d")]
        assert np.array_equal(a + d, np.eye(4, dtype=complex))
        assert s.membership(np.eye(4)) < 1e-12


class TestValidateSystem:
    def test_identity_span_is_valid(self):
        v = validate_system(OperatorSystem([np.eye(2)]))
        assert v.valid and v.dim == 1

    def test_lone_offdiagonal_unit_fails_both_checks(self):
        v = validate_system(OperatorSystem([unit_matrix(2, 0, 1)]))
        assert not v.contains_identity
        assert not v.star_closed
        assert not v.valid

    def test_full_matrix_algebra_is_valid(self):
        units = [unit_matrix(2, i, j) for i in range(2) for j in range(2)]
        v = validate_system(OperatorSystem(units))
        assert v.valid and v.dim == 4


class TestOrthoBasis:
    def test_first_element_is_normalized_identity(self):
        s = make_N_theta(Angle(1, 3))
        assert np.abs(s.ortho_basis[0] - np.eye(4) / 2).max() < 1e-14

    def test_hermitian_orthonormal_and_spanning(self):
        s = make_N_theta(Angle(1, 6))
        basis = s.ortho_basis
        assert len(basis) == 8
        for i, a in enumerate(basis):
            assert np.abs(a - a.conj().T).max() < 1e-13
            for j, b in enumerate(basis):
                ip = np.trace(a.conj().T @ b)
                assert abs(ip - (1.0 if i == j else 0.0)) < 1e-12
            assert s.membership(a) < 1e-10

    def test_invalid_system_has_no_ortho_basis(self):
        s = OperatorSystem([unit_matrix(2, 0, 1)])
        with pytest.raises(InvalidInput):
            _ = s.ortho_basis


class TestMembership:
    def test_identity_member(self):
        assert membership(make_N_theta(Angle(1, 2)), np.eye(4)) < 1e-12

    def test_zero_member(self):
        assert membership(make_N_theta(Angle(1, 2)), np.zeros((4, 4))) < 1e-15

    def test_lone_unit_13_residual(self):
        # the (1,3) slot is tied to (2,4) through the e coordinate, so the
        # lone matrix unit sits at HS distance sqrt(1 - 1/2) = sqrt(2)/2
        res = membership(make_N_theta(Angle(1, 2)), unit_matrix(4, 0, 2))
        assert res == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_adjoints_of_members_are_members(self):
        s = make_N_theta(Angle(2, 5))
        for b in s.basis:
            assert s.membership(b.conj().T) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            membership(make_N_theta(PI), np.eye(3))

    def test_random_combination_is_inside(self, rng):
        s = make_N_theta(Angle(1, 6))
        coeffs = random_complex(rng, 8)
        combo = sum(c * b for c, b in zip(coeffs, s.basis))
        assert s.membership(combo) < 1e-10 * np.linalg.norm(coeffs)


class TestTensorSystems:
    def test_identity_times_identity(self):
        t = tensor_systems(OperatorSystem([np.eye(2)]), OperatorSystem([np.eye(3)]))
        assert t.ambient_dim == 6
        assert t.dim == 1
        assert np.abs(t.basis[0] - np.eye(6)).max() < 1e-15

    def test_pair_of_systems_has_dim_64(self):
        t = tensor_systems(make_N_theta(Angle(1, 3)), make_N_theta(Angle(1, 2)))
        assert t.ambient_dim == 16
        assert len(t.basis) == 64
        assert stack_rank(t.basis) == 64
        assert t.dim == 64
        assert t.is_valid

    def test_rejects_invalid_operand(self):
        bad = OperatorSystem([unit_matrix(2, 0, 1)])
        with pytest.raises(InvalidInput):
            tensor_systems(bad, OperatorSystem([np.eye(2)]))

    def test_associativity_of_spans(self):
        systems = [make_N_theta(t) for t in (Angle(1, 6), Angle(1, 3), Angle(1, 2))]
        left = [
            np.kron(np.kron(a, b), c)
            for a in systems[0].basis
            for b in systems[1].basis
            for c in systems[2].basis
        ]
        right = [
            np.kron(a, np.kron(b, c))
            for a in systems[0].basis
            for b in systems[1].basis
            for c in systems[2].basis
        ]
        both = np.stack([vec(m) for m in left] + [vec(m) for m in right])
        assert stack_rank(left) == 512
        assert np.linalg.matrix_rank(both, tol=1e-8) == 512

    def test_membership_through_factors(self, rng):
        t = tensor_all([make_N_theta(Angle(1, 3)), make_N_theta(Angle(1, 2))])
        a = np.kron(t.factors[0].basis[4], t.factors[1].basis[6])
        assert t.membership(a) < 1e-10
        outside = unit_matrix(16, 0, 5)
        direct = OperatorSystem(t.basis).membership(outside)
        assert t.membership(outside) == pytest.approx(direct, abs=1e-10)

    def test_product_ortho_stacks_match_materialized(self):
        t = tensor_systems(make_N_theta(Angle(1, 4)), make_N_theta(Angle(1, 2)))
        stacks = t.ortho_stacks
        assert [s.shape for s in stacks] == [(8, 4, 4), (8, 4, 4)]
        materialized = t.ortho_basis
        assert len(materialized) == 64
        k = 0
        for a in stacks[0]:
            for b in stacks[1]:
                assert np.abs(np.kron(a, b) - materialized[k]).max() < 1e-14
                k += 1


class TestProductContractions:
    def test_pair_coeffs_against_dense(self, rng):
        t = tensor_systems(make_N_theta(Angle(1, 5)), make_N_theta(Angle(2, 3)))
        v = random_complex(rng, 16)
        w = random_complex(rng, 16)
        fast = product_pair_coeffs(t.ortho_stacks, v, w)
        dense = np.array([np.conj(v) @ a @ w for a in t.ortho_basis])
        assert np.abs(fast - dense).max() < 1e-11

    def test_matrix_coeffs_against_dense(self, rng):
        t = tensor_systems(make_N_theta(Angle(1, 5)), make_N_theta(Angle(2, 3)))
        x = random_complex(rng, 16, 16)
        fast = product_matrix_coeffs(t.ortho_stacks, x)
        dense = np.array([np.trace(a.conj().T @ x) for a in t.ortho_basis])
        assert np.abs(fast - dense).max() < 1e-11

    def test_single_factor_matches_direct(self, rng):
        s = make_N_theta(Angle(1, 3))
        v = random_complex(rng, 4)
        w = random_complex(rng, 4)
        fast = product_pair_coeffs(s.ortho_stacks, v, w)
        dense = np.array([np.conj(v) @ a @ w for a in s.ortho_basis])
        assert np.abs(fast - dense).max() < 1e-12


class TestJsonRoundtrip:
    def test_system_json(self):
        s = make_N_theta(Angle(1, 3))
        back = OperatorSystem.from_json(s.to_json())
        assert back.ambient_dim == 4
        assert back.dim == 8
        for a, b in zip(s.basis, back.basis):
            assert np.array_equal(a, b)
