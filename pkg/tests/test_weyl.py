"""Weyl algebra tests against independent dense-matrix oracles.

Oracles here build clock/shift matrices by literal loops and extract phases
from dense products, never through the functions under test.
"""

import cmath

import numpy as np
import pytest

from qudaqc.weyl import (
    WeylDecomposition,
    canonical_label,
    conjugation_phase,
    decompose,
    local_unitary_from_weyl_terms,
    root_of_unity,
    spin_conjugate,
    spin_operator,
    weyl_operator,
    weyl_product_phase,
)

DIMS = (2, 3, 4, 5)


def dense_clock(d):
    z = np.zeros((d, d), dtype=complex)
    for k in range(d):
        z[k, k] = cmath.exp(2j * cmath.pi * k / d)
    return z


def dense_shift(d):
    x = np.zeros((d, d), dtype=complex)
    for k in range(d):
        x[k, (k + 1) % d] = 1.0
    return x


def dense_weyl(d, a, b):
    return np.linalg.matrix_power(dense_clock(d), a) @ np.linalg.matrix_power(dense_shift(d), b)


def all_labels(d):
    return [(a, b) for a in range(d) for b in range(d)]


class TestWeylOperator:
    def test_qubit_z_is_pauli_z(self):
        np.testing.assert_allclose(weyl_operator(2, (1, 0)), np.diag([1.0, -1.0]))

    def test_qutrit_clock_diagonal(self):
        w = root_of_unity(3)
        np.testing.assert_allclose(weyl_operator(3, (1, 0)), np.diag([1, w, w**2]), atol=1e-15)

    def test_identity_label(self):
        np.testing.assert_allclose(weyl_operator(3, (0, 0)), np.eye(3))

    @pytest.mark.parametrize("d", DIMS)
    def test_matches_clock_shift_product(self, d):
        for a, b in all_labels(d):
            np.testing.assert_allclose(weyl_operator(d, (a, b)), dense_weyl(d, a, b), atol=1e-12)

    @pytest.mark.parametrize("d", DIMS)
    def test_unitary(self, d):
        for label in all_labels(d):
            w = weyl_operator(d, label)
            np.testing.assert_allclose(w @ w.conj().T, np.eye(d), atol=1e-12)

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            weyl_operator(1, (0, 0))

    def test_labels_reduced_mod_d(self):
        assert canonical_label(3, (-1, 4)) == (2, 1)
        np.testing.assert_allclose(weyl_operator(3, (-1, 4)), weyl_operator(3, (2, 1)))


class TestConjugationPhase:
    def test_qubit_sign_flip(self):
        assert conjugation_phase(2, (1, 0), (0, 1)) == pytest.approx(-1.0)

    def test_qutrit_z_by_x(self):
        # frozen from the dense 3x3 oracle below: X^dag Z X = w^-1 Z
        expected = cmath.exp(-2j * cmath.pi / 3)
        assert conjugation_phase(3, (1, 0), (0, 1)) == pytest.approx(expected)

    @pytest.mark.parametrize("d", DIMS)
    def test_identity_conjugator(self, d):
        for label in all_labels(d):
            assert conjugation_phase(d, label, (0, 0)) == pytest.approx(1.0)

    @pytest.mark.parametrize("d", DIMS)
    def test_against_dense_conjugation(self, d):
        for target in all_labels(d):
            if target == (0, 0):
                continue
            wt = dense_weyl(d, *target)
            for conj in all_labels(d):
                wc = dense_weyl(d, *conj)
                product = wc.conj().T @ wt @ wc
                # extract the scalar ratio on a nonzero entry of the target
                pos = np.unravel_index(np.abs(wt).argmax(), wt.shape)
                phase = product[pos] / wt[pos]
                np.testing.assert_allclose(product, phase * wt, atol=1e-12)
                assert conjugation_phase(d, target, conj) == pytest.approx(phase, abs=1e-12)


class TestProductPhase:
    @pytest.mark.parametrize("d", DIMS)
    def test_against_dense_product(self, d):
        for left in all_labels(d):
            for right in all_labels(d):
                phase, label = weyl_product_phase(d, left, right)
                dense = dense_weyl(d, *left) @ dense_weyl(d, *right)
                np.testing.assert_allclose(dense, phase * dense_weyl(d, *label), atol=1e-12)

    def test_commuting_clock_powers(self):
        phase, label = weyl_product_phase(3, (1, 0), (1, 0))
        assert phase == pytest.approx(1.0)
        assert label == (2, 0)

    def test_clock_times_shift(self):
        phase, label = weyl_product_phase(3, (1, 0), (0, 1))
        assert phase == pytest.approx(1.0)
        assert label == (1, 1)

    def test_qubit_zx(self):
        phase, label = weyl_product_phase(2, (1, 0), (0, 1))
        dense = dense_weyl(2, 1, 0) @ dense_weyl(2, 0, 1)
        np.testing.assert_allclose(dense, phase * dense_weyl(2, *label), atol=1e-14)


@pytest.mark.parametrize("d", DIMS)
def test_dagger_relation(d):
    # W(a,b)^dag = w^(ab) W(-a, -b): the exponent carries a plus sign here
    w = root_of_unity(d)
    for a, b in all_labels(d):
        lhs = weyl_operator(d, (a, b)).conj().T
        rhs = w ** (a * b) * weyl_operator(d, (-a % d, -b % d))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestSpinOperators:
    def test_spin_half_z(self):
        np.testing.assert_allclose(spin_operator(2, "z"), np.diag([0.5, -0.5]))

    def test_spin_one_z(self):
        np.testing.assert_allclose(spin_operator(3, "z"), np.diag([1.0, 0.0, -1.0]))

    @pytest.mark.parametrize("d", DIMS)
    def test_su2_commutators(self, d):
        sx, sy, sz = (spin_operator(d, ax) for ax in "xyz")
        for a, b, c in ((sx, sy, sz), (sy, sz, sx), (sz, sx, sy)):
            np.testing.assert_allclose(a @ b - b @ a, 1j * c, atol=1e-12)

    @pytest.mark.parametrize("d", DIMS)
    def test_hermitian(self, d):
        for ax in "xyz":
            s = spin_operator(d, ax)
            np.testing.assert_allclose(s, s.conj().T, atol=1e-14)

    @pytest.mark.parametrize("d", DIMS)
    def test_casimir(self, d):
        s = (d - 1) / 2
        total = sum(spin_operator(d, ax) @ spin_operator(d, ax) for ax in "xyz")
        np.testing.assert_allclose(total, s * (s + 1) * np.eye(d), atol=1e-12)


LEVI_CIVITA = {
    ("x", "y"): ("z", 1),
    ("y", "x"): ("z", -1),
    ("y", "z"): ("x", 1),
    ("z", "y"): ("x", -1),
    ("z", "x"): ("y", 1),
    ("x", "z"): ("y", -1),
}


class TestSpinConjugate:
    @pytest.mark.parametrize("d", DIMS)
    @pytest.mark.parametrize("theta", [0.0, np.pi / 4, np.pi / 2, np.pi])
    def test_closed_form(self, d, theta):
        for mu in "xyz":
            for nu in "xyz":
                got = spin_conjugate(d, mu, nu, theta)
                if mu == nu:
                    expected = spin_operator(d, mu)
                else:
                    eta, sign = LEVI_CIVITA[(mu, nu)]
                    expected = spin_operator(d, mu) * np.cos(theta) + sign * spin_operator(
                        d, eta
                    ) * np.sin(theta)
                np.testing.assert_allclose(got, expected, atol=1e-10)

    @pytest.mark.parametrize("d", DIMS)
    def test_pi_pulse_flips_other_axes(self, d):
        for mu in "xyz":
            for nu in "xyz":
                if mu == nu:
                    continue
                np.testing.assert_allclose(
                    spin_conjugate(d, mu, nu, np.pi), -spin_operator(d, mu), atol=1e-10
                )

    def test_quarter_turn_d4(self):
        # oracle: dense exponential conjugation, independent of the closed form
        sz = spin_operator(4, "z")
        sy = spin_operator(4, "y")
        evals, vecs = np.linalg.eigh(sy)
        u = (vecs * np.exp(1j * (np.pi / 2) * evals)) @ vecs.conj().T
        np.testing.assert_allclose(spin_conjugate(4, "z", "y", np.pi / 2), u @ sz @ u.conj().T, atol=1e-12)


class TestDecompose:
    def test_spin_z_coefficients(self):
        # Tr-orthogonality fixes these: c(1,0) = (1 - w^-2)/3, c(2,0) = (1 - w^-1)/3
        # for S_z = diag(1, 0, -1) and w = exp(2*pi*i/3).
        w = root_of_unity(3)
        dec = decompose(spin_operator(3, "z"), 3)
        assert set(dec.coefficients) == {(1, 0), (2, 0)}
        assert dec.coefficient((1, 0)) == pytest.approx((1 - w**-2) / 3)
        assert dec.coefficient((2, 0)) == pytest.approx((1 - w**-1) / 3)
        # the two coefficient families are complex-conjugate partners
        assert dec.coefficient((1, 0)) == pytest.approx(np.conj(dec.coefficient((2, 0))))

    def test_spin_z_squared_coefficients(self):
        w = root_of_unity(3)
        sz = spin_operator(3, "z")
        dec = decompose(sz @ sz, 3)
        assert dec.coefficient((0, 0)) == pytest.approx(2 / 3)
        assert dec.coefficient((1, 0)) == pytest.approx((1 + w**-2) / 3)
        assert dec.coefficient((2, 0)) == pytest.approx((1 + w**-1) / 3)

    def test_identity(self):
        dec = decompose(np.eye(3, dtype=complex), 3)
        assert set(dec.coefficients) == {(0, 0)}
        assert dec.coefficient((0, 0)) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            decompose(np.eye(3), 4)

    @pytest.mark.parametrize("d", DIMS)
    def test_roundtrip_random_hermitian(self, d):
        rng = np.random.default_rng(17 + d)
        for _ in range(100):
            m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            h = (m + m.conj().T) / 2
            dec = decompose(h, d)
            np.testing.assert_allclose(dec.reconstruct(), h, atol=1e-10)

    @pytest.mark.parametrize("d", (2, 3, 4))
    def test_hermitian_coefficient_symmetry(self, d):
        # from the dagger relation: conj(c_ab) = w^(-ab) c_(-a,-b)
        w = root_of_unity(d)
        rng = np.random.default_rng(5 + d)
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = (m + m.conj().T) / 2
        dec = decompose(h, d)
        for a in range(d):
            for b in range(d):
                lhs = np.conj(dec.coefficient((a, b)))
                rhs = w ** (-a * b) * dec.coefficient((-a % d, -b % d))
                assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_reconstruct_view(self):
        dec = WeylDecomposition(3, {(1, 0): 0.5 + 0j})
        np.testing.assert_allclose(dec.reconstruct(), 0.5 * weyl_operator(3, (1, 0)))


def test_local_unitary_from_weyl_terms():
    w = root_of_unity(3)
    terms = (((1, 0), (1 - w**-2) / 3), ((2, 0), (1 - w**-1) / 3))  # S_z itself
    u = local_unitary_from_weyl_terms(3, terms, scale=0.7)
    sz = spin_operator(3, "z")
    np.testing.assert_allclose(u, np.diag(np.exp(-1j * 0.7 * np.diag(sz))), atol=1e-12)


def test_local_unitary_rejects_non_hermitian():
    with pytest.raises(ValueError):
        local_unitary_from_weyl_terms(3, (((1, 0), 1.0 + 0j),), scale=1.0)
