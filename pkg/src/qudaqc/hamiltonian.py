"""One- and two-body n-qudit Hamiltonians in the Weyl basis.

Site indices are 1-based.  A Hamiltonian is a merged collection of two-body
couplings W(l1,l2) (x) W(l3,l4), single-site terms, and a real coefficient of
the global identity that is tracked but never compiled into analog blocks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .weyl import WeylLabel, canonical_label, check_dimension, decompose, spin_operator

COEFF_DROP_TOL = 1e-14
DEFAULT_DENSE_CAP = 2**14

RowKey = tuple[int, int, int, int, int, int]  # (i, j, l1, l2, l3, l4)


@dataclass(frozen=True)
class CouplingTerm:
    """Two-body Weyl coupling h * W(l1,l2)^(i) (x) W(l3,l4)^(j) with i < j."""

    site_i: int
    site_j: int
    labels: tuple[int, int, int, int]
    coefficient: complex

    def __post_init__(self):
        if self.site_i == self.site_j:
            raise ValueError("coupling needs two distinct sites")
        if self.site_i > self.site_j:
            raise ValueError("coupling sites must satisfy site_i < site_j")
        l1, l2, l3, l4 = self.labels
        if (l1, l2) == (0, 0) or (l3, l4) == (0, 0):
            raise ValueError("identity factors are not allowed inside a two-body term")

    @property
    def key(self) -> RowKey:
        return (self.site_i, self.site_j, *self.labels)


@dataclass(frozen=True)
class LocalTerm:
    """Single-site Weyl term h * W(a,b)^(site), label != (0,0)."""

    site: int
    label: WeylLabel
    coefficient: complex

    def __post_init__(self):
        if tuple(self.label) == (0, 0):
            raise ValueError("local terms must not be the identity")

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.site, *self.label)


def _merge_couplings(d, n, items):
    merged = {}
    for i, j, labels, coeff in items:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"site index out of range for n={n}: ({i}, {j})")
        li = canonical_label(d, labels[:2])
        lj = canonical_label(d, labels[2:])
        if i > j:
            i, j = j, i
            li, lj = lj, li
        key = (i, j, *li, *lj)
        merged[key] = merged.get(key, 0j) + complex(coeff)
    terms = []
    for key in sorted(merged):
        if abs(merged[key]) > COEFF_DROP_TOL:
            terms.append(CouplingTerm(key[0], key[1], key[2:], merged[key]))
    return tuple(terms)


def _merge_locals(d, n, items):
    merged = {}
    for site, label, coeff in items:
        if not 1 <= site <= n:
            raise ValueError(f"site index out of range for n={n}: {site}")
        key = (site, *canonical_label(d, label))
        merged[key] = merged.get(key, 0j) + complex(coeff)
    terms = []
    for key in sorted(merged):
        if abs(merged[key]) > COEFF_DROP_TOL:
            terms.append(LocalTerm(key[0], key[1:], merged[key]))
    return tuple(terms)


@dataclass(frozen=True)
class QuditHamiltonian:
    d: int
    n: int
    two_body: tuple = ()
    one_body: tuple = ()
    identity_offset: float = 0.0

    @classmethod
    def from_terms(cls, d, n, two_body=(), one_body=(), identity_offset=0.0):
        """Build with duplicate keys merged and near-zero coefficients dropped.

        two_body items are (i, j, (l1,l2,l3,l4), coeff); one_body items are
        (site, (a,b), coeff).
        """
        check_dimension(d)
        if n < 1:
            raise ValueError("need at least one qudit")
        return cls(
            d=d,
            n=n,
            two_body=_merge_couplings(d, n, two_body),
            one_body=_merge_locals(d, n, one_body),
            identity_offset=float(identity_offset),
        )

    def coupling_map(self) -> dict:
        return {t.key: t.coefficient for t in self.two_body}

    @property
    def is_diagonal(self) -> bool:
        """True when every term is a product of Z powers (X powers all zero)."""
        for t in self.two_body:
            if t.labels[1] != 0 or t.labels[3] != 0:
                return False
        return all(t.label[1] == 0 for t in self.one_body)

    def site_digits(self) -> np.ndarray:
        """(n, d^n) array: digits[s] holds the base-d digit of site s+1."""
        dim = self.d**self.n
        idx = np.arange(dim)
        return np.array([(idx // self.d ** (self.n - 1 - s)) % self.d for s in range(self.n)])

    def diagonal_energies(self) -> np.ndarray:
        """Real diagonal of a Z-type Hamiltonian, identity offset included."""
        if not self.is_diagonal:
            raise ValueError("Hamiltonian has X-type terms; no diagonal representation")
        digits = self.site_digits()
        dim = self.d**self.n
        energies = np.full(dim, self.identity_offset, dtype=complex)
        w_pow = np.exp(2j * np.pi * np.arange(self.d) / self.d)
        for t in self.two_body:
            a1, _, a2, _ = t.labels
            exps = (a1 * digits[t.site_i - 1] + a2 * digits[t.site_j - 1]) % self.d
            energies += t.coefficient * w_pow[exps]
        for t in self.one_body:
            exps = (t.label[0] * digits[t.site - 1]) % self.d
            energies += t.coefficient * w_pow[exps]
        imag = np.max(np.abs(energies.imag)) if dim else 0.0
        if imag > 1e-9:
            raise ValueError(f"diagonal energies are not real (max imag {imag:.2e})")
        return energies.real

    def materialize(self, max_dim: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        """Dense d^n x d^n matrix, sum of all terms plus identity offset."""
        dim = self.d**self.n
        if dim > max_dim:
            raise ValueError(f"dense size {dim} exceeds cap {max_dim}")
        digits = self.site_digits()
        rows = np.arange(dim)
        h = np.zeros((dim, dim), dtype=complex)
        w_pow = np.exp(2j * np.pi * np.arange(self.d) / self.d)

        def place(site):
            return self.d ** (self.n - site)

        for t in self.two_body:
            a1, b1, a2, b2 = t.labels
            ki = digits[t.site_i - 1]
            kj = digits[t.site_j - 1]
            cols = (
                rows
                + (((ki + b1) % self.d) - ki) * place(t.site_i)
                + (((kj + b2) % self.d) - kj) * place(t.site_j)
            )
            h[rows, cols] += t.coefficient * w_pow[(a1 * ki + a2 * kj) % self.d]
        for t in self.one_body:
            a, b = t.label
            k = digits[t.site - 1]
            cols = rows + (((k + b) % self.d) - k) * place(t.site)
            h[rows, cols] += t.coefficient * w_pow[(a * k) % self.d]
        h[rows, rows] += self.identity_offset
        return h

    # ---- file format -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "two_body": [
                {
                    "i": t.site_i,
                    "j": t.site_j,
                    "l": list(t.labels),
                    "re": t.coefficient.real,
                    "im": t.coefficient.imag,
                }
                for t in self.two_body
            ],
            "one_body": [
                {
                    "i": t.site,
                    "l": list(t.label),
                    "re": t.coefficient.real,
                    "im": t.coefficient.imag,
                }
                for t in self.one_body
            ],
            "identity_offset": self.identity_offset,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuditHamiltonian":
        two_body = [
            (item["i"], item["j"], tuple(item["l"]), complex(item["re"], item.get("im", 0.0)))
            for item in data.get("two_body", [])
        ]
        one_body = [
            (item["i"], tuple(item["l"]), complex(item["re"], item.get("im", 0.0)))
            for item in data.get("one_body", [])
        ]
        return cls.from_terms(
            data["d"], data["n"], two_body, one_body, data.get("identity_offset", 0.0)
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "QuditHamiltonian":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def from_spin_terms(d: int, n: int, terms) -> QuditHamiltonian:
    """Convert (site_i, site_j, op_i, op_j, coefficient) products to the Weyl basis.

    Each single-site operator is decomposed over W(a, b); identity (x) identity
    components accumulate into the identity offset and mixed identity components
    become single-site terms.
    """
    check_dimension(d)
    two_body = []
    one_body = []
    offset = 0.0
    for site_i, site_j, op_i, op_j, coeff in terms:
        for op in (op_i, op_j):
            op = np.asarray(op)
            if np.max(np.abs(op - op.conj().T)) > 1e-10:
                raise ValueError("spin-basis operators must be Hermitian")
        dec_i = decompose(np.asarray(op_i, dtype=complex), d)
        dec_j = decompose(np.asarray(op_j, dtype=complex), d)
        for label_i, c_i in dec_i.coefficients.items():
            for label_j, c_j in dec_j.coefficients.items():
                c = coeff * c_i * c_j
                if label_i == (0, 0) and label_j == (0, 0):
                    if abs(c.imag) > 1e-10:
                        raise ValueError("identity component of a Hermitian product must be real")
                    offset += c.real
                elif label_i == (0, 0):
                    one_body.append((site_j, label_j, c))
                elif label_j == (0, 0):
                    one_body.append((site_i, label_i, c))
                else:
                    two_body.append((site_i, site_j, (*label_i, *label_j), c))
    return QuditHamiltonian.from_terms(d, n, two_body, one_body, offset)


def blbq_problem(n: int, theta: float) -> QuditHamiltonian:
    """Spin-1 chain sum_i [cos(theta) Sz Sz + sin(theta) (Sz Sz)^2] in the Weyl basis.

    The biquadratic term is Sz^2 (x) Sz^2 since Sz is diagonal; its identity
    component lands in identity_offset and its single-site remainders in
    one_body, so materialize() reproduces the full spin Hamiltonian.
    """
    if n < 2:
        raise ValueError("chain needs at least two qutrits")
    sz = spin_operator(3, "z")
    sz2 = sz @ sz
    terms = []
    for i in range(1, n):
        terms.append((i, i + 1, sz, sz, math.cos(theta)))
        terms.append((i, i + 1, sz2, sz2, math.sin(theta)))
    return from_spin_terms(3, n, terms)


def zz_source(n: int, d: int) -> QuditHamiltonian:
    """Nearest-neighbour sum_i Sz^(i) Sz^(i+1) in the Weyl basis."""
    if n < 2:
        raise ValueError("chain needs at least two qudits")
    sz = spin_operator(d, "z")
    return from_spin_terms(d, n, [(i, i + 1, sz, sz, 1.0) for i in range(1, n)])


@dataclass(frozen=True)
class CompatibilityReport:
    compatible: bool
    violations: tuple = field(default_factory=tuple)


def check_compatibility(source: QuditHamiltonian, problem: QuditHamiltonian) -> CompatibilityReport:
    """Every site pair coupled in the problem must carry some source coupling."""
    if (source.d, source.n) != (problem.d, problem.n):
        raise ValueError(
            f"source ({source.d},{source.n}) and problem ({problem.d},{problem.n}) disagree"
        )
    source_pairs = {(t.site_i, t.site_j) for t in source.two_body}
    problem_pairs = {(t.site_i, t.site_j) for t in problem.two_body}
    violations = tuple(sorted(problem_pairs - source_pairs))
    return CompatibilityReport(compatible=not violations, violations=violations)
