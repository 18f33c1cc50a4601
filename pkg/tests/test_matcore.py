import math

import numpy as np
import pytest

from zekit.errors import NotHermitian
from zekit.matcore import (
    Angle,
    PI,
    angle_sum,
    herm_eig_min,
    kron,
    matrix_from_json,
    matrix_to_json,
    stack_rank,
    svd_rank,
    vec,
    vector_from_json,
    vector_to_json,
)

from conftest import random_complex, random_unitary


def diag_unitary(theta):
    return np.diag([1.0, theta.gamma]).astype(np.complex128)


class TestAngle:
    def test_normalization_into_half_open_interval(self):
        assert Angle(3, 2) == Angle(-1, 2)
        assert Angle(2, 1) == Angle(0, 1)
        assert Angle(-1, 1) == Angle(1, 1)  # -pi wraps to pi
        assert Angle(4, 4) == PI

    def test_reduction(self):
        a = Angle(2, 6)
        assert (a.numerator, a.denominator) == (1, 3)
        assert math.gcd(abs(a.numerator), a.denominator) == 1

    def test_exact_third_sum_is_pi(self):
        third = Angle(1, 3)
        assert angle_sum([third, third, third]) == PI

    def test_sum_wraps_mod_two_pi(self):
        assert angle_sum([PI, PI, PI]) == PI
        assert Angle(5, 6) + Angle(1, 2) == Angle(-2, 3)

    def test_gamma_quadrants_exact(self):
        assert Angle(1, 1).gamma == -1
        assert Angle(1, 2).gamma == 1j
        assert Angle(-1, 2).gamma == -1j
        assert Angle(0, 1).gamma == 1

    def test_parse_and_str_roundtrip(self):
        for text in ["1/3", "-1/2", "1", "5/6"]:
            assert str(Angle.parse(text)) == text

    def test_from_radians_approximation(self):
        a = Angle.from_radians(0.2)
        assert abs(a.radians - 0.2) < 1e-9

    def test_half_root_is_principal(self):
        a = Angle(1, 1)
        assert abs(a.half_root - 1j) < 1e-15


class TestKron:
    def test_identity_case(self):
        assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_block_layout_of_matrix_unit(self):
        # |2><1| (x) I_2 puts I_2 in block (2,1) and zeros elsewhere
        unit = np.zeros((2, 2))
        unit[1, 0] = 1.0
        out = kron(unit, np.eye(2))
        expect = np.zeros((4, 4))
        expect[2:4, 0:2] = np.eye(2)
        assert np.array_equal(out, expect)

    def test_diagonal_unitaries_quarter_turn(self):
        # U1 (x) V1 at theta1 = theta2 = pi/2 is diag{1, i, i, -1}
        u = diag_unitary(Angle(1, 2))
        out = kron(u, u)
        assert np.array_equal(out, np.diag([1, 1j, 1j, -1]).astype(complex))

    def test_associative_exactly_on_quadrant_entries(self):
        u = diag_unitary(Angle(1, 2))
        flip = np.array([[0, 1], [1, 0]], dtype=complex)
        left = kron(kron(u, flip), u)
        right = kron(u, kron(flip, u))
        assert np.array_equal(left, right)

    def test_adjoint_distributes_entrywise(self, rng):
        a = random_complex(rng, 3, 3)
        b = random_complex(rng, 2, 2)
        assert np.array_equal(kron(a, b).conj().T, kron(a.conj().T, b.conj().T))

    def test_product_inner_product_factorizes(self, rng):
        a = random_complex(rng, 3, 3)
        b = random_complex(rng, 4, 4)
        x, u = (random_complex(rng, 3) for _ in range(2))
        y, v = (random_complex(rng, 4) for _ in range(2))
        lhs = np.conj(np.kron(x, y)) @ kron(a, b) @ np.kron(u, v)
        rhs = (np.conj(x) @ a @ u) * (np.conj(y) @ b @ v)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


class TestSvdRank:
    def test_zero_matrix(self):
        assert svd_rank(np.zeros((4, 4)), 1e-10) == 0

    def test_identity(self):
        assert svd_rank(np.eye(4), 1e-10) == 4

    def test_system_basis_rank_against_gram_oracle(self):
        from zekit.opsys import make_N_theta

        mats = make_N_theta(Angle(1, 3)).basis
        rows = np.stack([vec(m) for m in mats])
        # independent oracle: count of Gram-matrix eigenvalues above
        # (tol * sqrt(largest eigenvalue))^2
        gram = rows @ rows.conj().T
        evals = np.linalg.eigvalsh(gram)
        lam_max = evals[-1]
        oracle = int(np.count_nonzero(evals > (1e-10) ** 2 * lam_max))
        assert oracle == 8
        assert svd_rank(rows, 1e-10) == 8
        assert stack_rank(mats) == 8

    def test_invariant_under_unitaries(self, rng):
        m = random_complex(rng, 5, 3) @ random_complex(rng, 3, 5)
        u = random_unitary(rng, 5)
        w = random_unitary(rng, 5)
        assert svd_rank(m, 1e-10) == 3
        assert svd_rank(u @ m, 1e-10) == 3
        assert svd_rank(m @ w, 1e-10) == 3


class TestHermEigMin:
    def test_identity(self):
        assert herm_eig_min(np.eye(3)) == pytest.approx(1.0, abs=1e-14)

    def test_indefinite_diagonal(self):
        assert herm_eig_min(np.diag([1.0, -1.0])) == pytest.approx(-1.0, abs=1e-14)

    def test_u_plus_u_dagger_quarter_turn(self):
        # eigenvalues of U1 + U1* at theta=pi/2 are {2, 2cos(theta)} = {2, 0}
        u = diag_unitary(Angle(1, 2))
        assert herm_eig_min(u + u.conj().T) == pytest.approx(0.0, abs=1e-14)

    def test_rejects_non_hermitian(self, rng):
        m = random_complex(rng, 3, 3)
        with pytest.raises(NotHermitian):
            herm_eig_min(m + np.eye(3))


class TestJson:
    def test_matrix_roundtrip(self, rng):
        m = random_complex(rng, 3, 2)
        obj = matrix_to_json(m)
        assert obj["rows"] == 3 and obj["cols"] == 2
        assert len(obj["data"]) == 6
        back = matrix_from_json(obj)
        assert np.array_equal(back, m)

    def test_row_major_order(self):
        m = np.array([[1 + 2j, 3.0], [4.0, 5j]])
        obj = matrix_to_json(m)
        assert obj["data"][0] == [1.0, 2.0]
        assert obj["data"][1] == [3.0, 0.0]
        assert obj["data"][2] == [4.0, 0.0]

    def test_vector_roundtrip(self, rng):
        v = random_complex(rng, 5)
        assert np.array_equal(vector_from_json(vector_to_json(v)), v)

    def test_bad_length_rejected(self):
        with pytest.raises(ValueError):
            matrix_from_json({"rows": 2, "cols": 2, "data": [[1.0, 0.0]]})
