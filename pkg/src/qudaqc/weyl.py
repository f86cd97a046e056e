"""Weyl-Heisenberg operator algebra for d-level systems.

Conventions: the clock operator is Z = diag(1, w, ..., w^(d-1)) with
w = exp(2*pi*i/d), the shift operator X maps |j> to |j-1 mod d>, and the
basis element W(a, b) = Z^a X^b.  Phases are tracked as integer exponents
of w wherever possible and materialized to complex numbers only when a
matrix is actually built, so products of phases never drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

WeylLabel = tuple[int, int]

AXES = ("x", "y", "z")


def check_dimension(d: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"qudit dimension must be an integer >= 2, got {d!r}")


def root_of_unity(d: int) -> complex:
    """Primitive d-th root of unity w = exp(2*pi*i/d)."""
    check_dimension(d)
    return complex(np.exp(2j * np.pi / d))


def canonical_label(d: int, label) -> WeylLabel:
    """Reduce a (Z-power, X-power) pair modulo d."""
    a, b = label
    return int(a) % d, int(b) % d


def phase_from_exponent(d: int, exponent: int) -> complex:
    """Materialize w**exponent with the exponent reduced mod d first."""
    return complex(np.exp(2j * np.pi * (int(exponent) % d) / d))


def weyl_operator(d: int, label) -> np.ndarray:
    """Dense W(a, b) = Z^a X^b = sum_k w^(k a) |k><(k+b) mod d|."""
    check_dimension(d)
    a, b = canonical_label(d, label)
    k = np.arange(d)
    op = np.zeros((d, d), dtype=complex)
    op[k, (k + b) % d] = np.exp(2j * np.pi * ((k * a) % d) / d)
    return op


def conjugation_exponent(d: int, target, conjugator) -> int:
    """Integer e with W(k)^dag W(l) W(k) = w^e W(l), reduced mod d."""
    l1, l2 = canonical_label(d, target)
    k1, k2 = canonical_label(d, conjugator)
    return (l2 * k1 - l1 * k2) % d


def conjugation_phase(d: int, target, conjugator) -> complex:
    """Scalar phi such that W(conjugator)^dag W(target) W(conjugator) = phi W(target)."""
    check_dimension(d)
    return phase_from_exponent(d, conjugation_exponent(d, target, conjugator))


def weyl_product_phase(d: int, left, right) -> tuple[complex, WeylLabel]:
    """Phase and label with W(left) W(right) = phase * W(left + right)."""
    check_dimension(d)
    k1, k2 = canonical_label(d, left)
    l1, l2 = canonical_label(d, right)
    phase = phase_from_exponent(d, l1 * k2)
    return phase, ((k1 + l1) % d, (k2 + l2) % d)


def spin_operator(d: int, axis: str) -> np.ndarray:
    """Spin-s matrix S_axis for s = (d-1)/2 with hbar = 1.

    Basis ordering is m = s, s-1, ..., -s, so S_z = diag(s, ..., -s) and
    [S_x, S_y] = i S_z (cyclically).
    """
    check_dimension(d)
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    s = (d - 1) / 2.0
    m = s - np.arange(d)
    if axis == "z":
        return np.diag(m).astype(complex)
    # raising operator: S+|s,m> = sqrt(s(s+1) - m(m+1)) |s,m+1>
    sp = np.zeros((d, d), dtype=complex)
    lower_m = m[1:]
    sp[np.arange(d - 1), np.arange(1, d)] = np.sqrt(s * (s + 1) - lower_m * (lower_m + 1))
    if axis == "x":
        return (sp + sp.conj().T) / 2.0
    return (sp - sp.conj().T) / 2.0j


def spin_conjugate(d: int, mu: str, nu: str, theta: float) -> np.ndarray:
    """exp(i theta S_nu) S_mu exp(-i theta S_nu), computed by exponentiation."""
    s_mu = spin_operator(d, mu)
    s_nu = spin_operator(d, nu)
    evals, vecs = np.linalg.eigh(s_nu)
    u = (vecs * np.exp(1j * theta * evals)) @ vecs.conj().T
    return u @ s_mu @ u.conj().T


@dataclass(frozen=True)
class WeylDecomposition:
    """Expansion of a d x d operator as sum_ab c_ab W(a, b)."""

    d: int
    coefficients: dict

    def coefficient(self, label) -> complex:
        return self.coefficients.get(canonical_label(self.d, label), 0j)

    def reconstruct(self) -> np.ndarray:
        op = np.zeros((self.d, self.d), dtype=complex)
        for label, c in self.coefficients.items():
            op += c * weyl_operator(self.d, label)
        return op

    def labels(self) -> list[WeylLabel]:
        return sorted(self.coefficients)


def decompose(op: np.ndarray, d: int, drop_tol: float = 1e-14) -> WeylDecomposition:
    """Weyl-basis coefficients c_ab = Tr(W(a,b)^dag op) / d.

    The W(a, b) are trace-orthogonal, Tr(W^dag W') = d * delta, so this
    reconstructs op exactly.  Coefficients below drop_tol are discarded.
    """
    check_dimension(d)
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match dimension {d}")
    coefficients = {}
    for a in range(d):
        for b in range(d):
            w = weyl_operator(d, (a, b))
            c = complex(np.trace(w.conj().T @ op) / d)
            if abs(c) > drop_tol:
                coefficients[(a, b)] = c
    return WeylDecomposition(d, coefficients)


def local_unitary_from_weyl_terms(d: int, terms, scale: float = 1.0) -> np.ndarray:
    """exp(-i * scale * sum_ab c_ab W(a,b)) for a Hermitian combination."""
    gen = np.zeros((d, d), dtype=complex)
    for label, c in terms:
        gen += c * weyl_operator(d, label)
    herm_defect = np.max(np.abs(gen - gen.conj().T))
    if herm_defect > 1e-9:
        raise ValueError(f"Weyl terms do not form a Hermitian generator (defect {herm_defect:.2e})")
    return scipy.linalg.expm(-1j * scale * gen)
