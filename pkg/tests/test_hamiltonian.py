"""Hamiltonian construction tests; the oracle is direct Kronecker assembly."""

import math

import numpy as np
import pytest

from qudaqc.hamiltonian import (
    CouplingTerm,
    LocalTerm,
    QuditHamiltonian,
    blbq_problem,
    check_compatibility,
    from_spin_terms,
    zz_source,
)
from qudaqc.weyl import root_of_unity, spin_operator, weyl_operator


def kron_chain(ops):
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed_two_site(n, i, j, op_i, op_j):
    d = op_i.shape[0]
    mats = [np.eye(d, dtype=complex)] * n
    mats[i - 1] = op_i
    mats[j - 1] = op_j
    return kron_chain(mats)


class TestTermValidation:
    def test_identity_factor_rejected(self):
        with pytest.raises(ValueError):
            CouplingTerm(1, 2, (0, 0, 1, 0), 1.0)

    def test_same_site_rejected(self):
        with pytest.raises(ValueError):
            CouplingTerm(1, 1, (1, 0, 1, 0), 1.0)

    def test_local_identity_rejected(self):
        with pytest.raises(ValueError):
            LocalTerm(1, (0, 0), 1.0)

    def test_duplicate_keys_merge(self):
        h = QuditHamiltonian.from_terms(
            3, 2, [(1, 2, (1, 0, 1, 0), 0.25), (1, 2, (1, 0, 1, 0), 0.5)]
        )
        assert len(h.two_body) == 1
        assert h.two_body[0].coefficient == pytest.approx(0.75)

    def test_tiny_coefficients_dropped(self):
        h = QuditHamiltonian.from_terms(3, 2, [(1, 2, (1, 0, 1, 0), 1e-16)])
        assert h.two_body == ()

    def test_site_order_normalized(self):
        h = QuditHamiltonian.from_terms(3, 2, [(2, 1, (1, 0, 2, 0), 1.0)])
        term = h.two_body[0]
        assert (term.site_i, term.site_j) == (1, 2)
        assert term.labels == (2, 0, 1, 0)


class TestFromSpinTerms:
    def test_qubit_zz(self):
        sz = spin_operator(2, "z")
        h = from_spin_terms(2, 2, [(1, 2, sz, sz, 1.0)])
        assert len(h.two_body) == 1
        term = h.two_body[0]
        assert term.labels == (1, 0, 1, 0)
        assert term.coefficient == pytest.approx(0.25)

    def test_qutrit_zz_coefficients(self):
        w = root_of_unity(3)
        sz = spin_operator(3, "z")
        h = from_spin_terms(3, 2, [(1, 2, sz, sz, 1.0)])
        coeffs = h.coupling_map()
        c1 = (1 - w**-2) / 3  # coefficient of the clock operator in S_z
        c2 = (1 - w**-1) / 3
        assert coeffs[(1, 2, 1, 0, 1, 0)] == pytest.approx(c1 * c1)
        assert coeffs[(1, 2, 1, 0, 2, 0)] == pytest.approx(c1 * c2)
        assert coeffs[(1, 2, 2, 0, 1, 0)] == pytest.approx(c2 * c1)
        assert coeffs[(1, 2, 2, 0, 2, 0)] == pytest.approx(c2 * c2)
        assert h.one_body == ()
        assert h.identity_offset == pytest.approx(0.0)

    def test_qutrit_quadratic_coefficients(self):
        # the (1 +- w^-k) products of the quadratic spin decomposition
        w = root_of_unity(3)
        sz2 = spin_operator(3, "z") @ spin_operator(3, "z")
        h = from_spin_terms(3, 2, [(1, 2, sz2, sz2, 1.0)])
        coeffs = h.coupling_map()
        q1 = (1 + w**-2) / 3
        q2 = (1 + w**-1) / 3
        assert coeffs[(1, 2, 1, 0, 1, 0)] == pytest.approx(q1 * q1)
        assert coeffs[(1, 2, 1, 0, 2, 0)] == pytest.approx(q1 * q2)
        assert coeffs[(1, 2, 2, 0, 2, 0)] == pytest.approx(q2 * q2)
        # identity (x) identity -> offset; identity (x) W -> one-body terms
        assert h.identity_offset == pytest.approx(4 / 9)
        sites = sorted({t.site for t in h.one_body})
        assert sites == [1, 2]

    def test_non_hermitian_rejected(self):
        bad = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(ValueError):
            from_spin_terms(2, 2, [(1, 2, bad, bad, 1.0)])

    @pytest.mark.parametrize("d,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
    def test_roundtrip_against_kron(self, d, n):
        rng = np.random.default_rng(40 + d + n)
        ops = []
        for _ in range(2):
            m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            ops.append((m + m.conj().T) / 2)
        terms, expected = [], np.zeros((d**n, d**n), dtype=complex)
        for i in range(1, n):
            coeff = rng.normal()
            terms.append((i, i + 1, ops[0], ops[1], coeff))
            expected += coeff * embed_two_site(n, i, i + 1, ops[0], ops[1])
        h = from_spin_terms(d, n, terms)
        np.testing.assert_allclose(h.materialize(), expected, atol=1e-10)


class TestBuiltinModels:
    def test_blbq_theta_zero_matches_zz(self):
        h = blbq_problem(2, 0.0)
        sz = spin_operator(3, "z")
        np.testing.assert_allclose(h.materialize(), np.kron(sz, sz), atol=1e-12)

    def test_blbq_halfpi_matches_quadratic(self):
        h = blbq_problem(2, math.pi / 2)
        sz2 = spin_operator(3, "z") @ spin_operator(3, "z")
        np.testing.assert_allclose(h.materialize(), np.kron(sz2, sz2), atol=1e-12)

    @pytest.mark.parametrize("n", (2, 3))
    @pytest.mark.parametrize("k", range(9))
    def test_blbq_materializes_full_hamiltonian(self, n, k):
        theta = k * math.pi / 8
        sz = spin_operator(3, "z")
        sz2 = sz @ sz
        expected = np.zeros((3**n, 3**n), dtype=complex)
        for i in range(1, n):
            expected += math.cos(theta) * embed_two_site(n, i, i + 1, sz, sz)
            expected += math.sin(theta) * embed_two_site(n, i, i + 1, sz2, sz2)
        np.testing.assert_allclose(blbq_problem(n, theta).materialize(), expected, atol=1e-10)

    def test_blbq_halfpi_two_body_shares_zz_support(self):
        # quadratic and linear chains drive the same four clock-clock couplings
        quad = blbq_problem(2, math.pi / 2)
        lin = zz_source(2, 3)
        assert set(quad.coupling_map()) == set(lin.coupling_map())

    def test_blbq_chain_structure(self):
        h = blbq_problem(3, 0.3)
        pairs = sorted({(t.site_i, t.site_j) for t in h.two_body})
        assert pairs == [(1, 2), (2, 3)]
        per_pair = [sum(1 for t in h.two_body if (t.site_i, t.site_j) == p) for p in pairs]
        assert per_pair == [4, 4]

    def test_blbq_needs_two_sites(self):
        with pytest.raises(ValueError):
            blbq_problem(1, 0.0)

    def test_zz_source_counts(self):
        assert len(zz_source(6, 3).two_body) == 5 * 4
        assert len(zz_source(2, 2).two_body) == 1
        assert zz_source(2, 2).two_body[0].coefficient == pytest.approx(0.25)

    def test_zz_source_materializes(self):
        sz = spin_operator(3, "z")
        expected = embed_two_site(3, 1, 2, sz, sz) + embed_two_site(3, 2, 3, sz, sz)
        np.testing.assert_allclose(zz_source(3, 3).materialize(), expected, atol=1e-12)


class TestMaterialize:
    def test_empty_hamiltonian(self):
        h = QuditHamiltonian.from_terms(3, 2)
        np.testing.assert_allclose(h.materialize(), np.zeros((9, 9)))

    def test_size_cap(self):
        h = QuditHamiltonian.from_terms(2, 4)
        with pytest.raises(ValueError):
            h.materialize(max_dim=8)

    @pytest.mark.parametrize("n", (2, 3))
    def test_hermitian(self, n):
        for theta in np.linspace(0, math.pi, 9):
            mat = blbq_problem(n, theta).materialize()
            np.testing.assert_allclose(mat, mat.conj().T, atol=1e-10)

    def test_general_weyl_term_against_kron(self):
        h = QuditHamiltonian.from_terms(
            3,
            3,
            [(1, 3, (1, 2, 2, 1), 0.5 + 0.25j), (1, 3, (2, 1, 1, 2), 0.5 - 0.25j)],
            [(2, (1, 1), 0.3 + 0.1j), (2, (2, 2), 0.3 - 0.1j)],
            identity_offset=0.7,
        )
        expected = 0.7 * np.eye(27, dtype=complex)
        expected += (0.5 + 0.25j) * embed_two_site(3, 1, 3, weyl_operator(3, (1, 2)), weyl_operator(3, (2, 1)))
        expected += (0.5 - 0.25j) * embed_two_site(3, 1, 3, weyl_operator(3, (2, 1)), weyl_operator(3, (1, 2)))
        mats = [np.eye(3, dtype=complex)] * 3
        mats[1] = (0.3 + 0.1j) * weyl_operator(3, (1, 1)) + (0.3 - 0.1j) * weyl_operator(3, (2, 2))
        expected += kron_chain([np.eye(3, dtype=complex), mats[1] @ np.eye(3), np.eye(3, dtype=complex)])
        np.testing.assert_allclose(h.materialize(), expected, atol=1e-12)

    def test_diagonal_energies_match_dense(self):
        h = blbq_problem(3, 0.4)
        assert h.is_diagonal
        np.testing.assert_allclose(
            np.diag(h.materialize()).real, h.diagonal_energies(), atol=1e-12
        )


class TestCompatibility:
    def test_chain_pair(self):
        report = check_compatibility(zz_source(6, 3), blbq_problem(6, math.pi / 4))
        assert report.compatible
        assert report.violations == ()

    def test_missing_edge(self):
        source = zz_source(3, 3)
        sz = spin_operator(3, "z")
        problem = from_spin_terms(3, 3, [(1, 3, sz, sz, 1.0)])
        report = check_compatibility(source, problem)
        assert not report.compatible
        assert report.violations == ((1, 3),)

    def test_empty_problem_compatible(self):
        problem = QuditHamiltonian.from_terms(3, 3)
        assert check_compatibility(zz_source(3, 3), problem).compatible

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            check_compatibility(zz_source(3, 3), zz_source(4, 3))


class TestFileFormat:
    def test_roundtrip(self, tmp_path):
        h = blbq_problem(3, 0.77)
        path = tmp_path / "h.json"
        h.save(path)
        loaded = QuditHamiltonian.load(path)
        assert loaded == h

    def test_schema_keys(self, tmp_path):
        import json

        h = zz_source(2, 3)
        path = tmp_path / "h.json"
        h.save(path)
        data = json.loads(path.read_text())
        assert set(data) == {"d", "n", "two_body", "one_body", "identity_offset"}
        assert set(data["two_body"][0]) == {"i", "j", "l", "re", "im"}
