"""Gate-word enumeration, the conjugation phase matrix, and its verifiers.

A gate word assigns one Weyl label per qudit (identity where absent).
Conjugating a two-body coupling by a word multiplies its coefficient by a
d-th root of unity; collecting these phases over a set of couplings (rows)
and words (columns) yields the matrix that the schedule solver inverts.

The verifier half of this module rebuilds the four structural submatrices of
the two-qudit conjugation block from their index maps and checks the full set
of algebraic identities, eigenvalue memberships, row-sum cancellations, and
the nonvanishing determinant that underpin solvability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hamiltonian import CouplingTerm, RowKey
from .weyl import canonical_label, check_dimension, phase_from_exponent


@dataclass(frozen=True)
class GateWord:
    """One Weyl label per qudit; sites with the identity are not stored."""

    d: int
    n: int
    labels: tuple = ()  # sorted tuple of (site, (a, b)) with (a, b) != (0, 0)

    @classmethod
    def from_mapping(cls, d, n, mapping) -> "GateWord":
        stored = []
        for site, label in mapping.items():
            site = int(site)
            if not 1 <= site <= n:
                raise ValueError(f"site {site} out of range for n={n}")
            label = canonical_label(d, label)
            if label != (0, 0):
                stored.append((site, label))
        return cls(d, n, tuple(sorted(stored)))

    @property
    def weight(self) -> int:
        return len(self.labels)

    def label_at(self, site: int):
        for s, label in self.labels:
            if s == site:
                return label
        return (0, 0)

    def as_dict(self) -> dict:
        return {site: label for site, label in self.labels}


def _row_key(row) -> RowKey:
    if isinstance(row, CouplingTerm):
        return row.key
    key = tuple(int(x) for x in row)
    if len(key) != 6:
        raise ValueError(f"row key must be (i, j, l1, l2, l3, l4), got {row!r}")
    return key


def coupling_phase_exponent(row, word: GateWord) -> int:
    i, j, l1, l2, l3, l4 = _row_key(row)
    k1, k2 = word.label_at(i)
    k3, k4 = word.label_at(j)
    return (l2 * k1 - l1 * k2 + l4 * k3 - l3 * k4) % word.d


def coupling_phase(row, word: GateWord) -> complex:
    """Root-of-unity phase the coupling acquires under conjugation by word.

    Sites outside the coupling contribute nothing: conjugation acts per site
    and the phase is the product of the two on-site conjugation phases.
    """
    return phase_from_exponent(word.d, coupling_phase_exponent(row, word))


def x_power_labels(d: int) -> tuple:
    return tuple((0, b) for b in range(1, d))


def z_power_labels(d: int) -> tuple:
    return tuple((a, 0) for a in range(1, d))


def enumerate_words(d, n, max_weight=None, site_labels=None) -> list[GateWord]:
    """Deterministic lexicographic enumeration of gate words.

    site_labels restricts the non-identity labels available at every site
    (default: all d^2 - 1).  max_weight caps the number of conjugated sites.
    Unrestricted with max_weight = n yields all d^(2n) words, counting
    identity labels.
    """
    check_dimension(d)
    if site_labels is None:
        allowed = [(a, b) for a in range(d) for b in range(d) if (a, b) != (0, 0)]
    else:
        allowed = sorted({canonical_label(d, lab) for lab in site_labels} - {(0, 0)})
    options = [(0, 0)] + list(allowed)
    if max_weight is None:
        max_weight = n
    words = []
    for combo in itertools.product(options, repeat=n):
        weight = sum(1 for lab in combo if lab != (0, 0))
        if weight > max_weight:
            continue
        labels = tuple((s + 1, lab) for s, lab in enumerate(combo) if lab != (0, 0))
        words.append(GateWord(d, n, labels))
    return words


@dataclass(frozen=True)
class PhaseMatrix:
    """Phases acquired by each coupling (row) under each gate word (column)."""

    d: int
    n: int
    rows: tuple
    words: tuple
    entries: np.ndarray

    @property
    def shape(self):
        return self.entries.shape


def _word_label_array(words, n) -> np.ndarray:
    arr = np.zeros((len(words), n, 2), dtype=np.int64)
    for c, w in enumerate(words):
        for site, (a, b) in w.labels:
            arr[c, site - 1, 0] = a
            arr[c, site - 1, 1] = b
    return arr


def build_matrix(rows, words, dedup: bool = False) -> PhaseMatrix:
    """Assemble the phase matrix for the given rows and words.

    With dedup=True, later columns whose phase pattern repeats an earlier one
    on this row set are dropped (the first word in enumeration order is kept);
    deduplication cannot change the solvable set since duplicate columns span
    nothing new.
    """
    words = list(words)
    if not words:
        raise ValueError("need at least one gate word")
    d, n = words[0].d, words[0].n
    keys = [_row_key(r) for r in rows]
    arr = _word_label_array(words, n)
    exponents = np.zeros((len(keys), len(words)), dtype=np.int64)
    for r, (i, j, l1, l2, l3, l4) in enumerate(keys):
        k1 = arr[:, i - 1, 0]
        k2 = arr[:, i - 1, 1]
        k3 = arr[:, j - 1, 0]
        k4 = arr[:, j - 1, 1]
        exponents[r] = (l2 * k1 - l1 * k2 + l4 * k3 - l3 * k4) % d
    if dedup and len(keys):
        _, first = np.unique(exponents, axis=1, return_index=True)
        keep = np.sort(first)
        exponents = exponents[:, keep]
        words = [words[c] for c in keep]
    entries = np.exp(2j * np.pi * exponents / d)
    return PhaseMatrix(d, n, tuple(keys), tuple(words), entries)


# ---- two-qudit conjugation block (index maps and submatrices) --------------


def quartet_to_index(d: int, quartet) -> int:
    """1-based row index of a non-identity label quartet (l1, l2, l3, l4)."""
    l1, l2, l3, l4 = quartet
    alpha = d * l1 + l2
    beta = d * l3 + l4
    if alpha == 0 or beta == 0:
        raise ValueError("quartet contains an identity pair")
    return (d * d - 1) * (alpha - 1) + beta


def quartet_from_index(d: int, i: int) -> tuple[int, int, int, int]:
    """Inverse of quartet_to_index via the floor-function formulas."""
    m = d * d - 1
    l1 = ((i - 1) // m + 1) // d
    l2 = (i - 1) // m + 1 - d * l1
    l3 = (i - ((i - 1) // m) * m) // d
    l4 = i - ((i - 1) // m) * m - d * l3
    return (l1, l2, l3, l4)


@dataclass(frozen=True)
class SubmatrixSet:
    """The four (d^2-1)^2-dimensional blocks of the two-qudit conjugation matrix.

    m2 phases both qudits of the coupling, m11 only the first, m12 only the
    second, and m0 neither (all ones).
    """

    d: int
    m2: np.ndarray
    m11: np.ndarray
    m12: np.ndarray
    m0: np.ndarray


def submatrices(d: int) -> SubmatrixSet:
    check_dimension(d)
    size = (d * d - 1) ** 2
    quartets = np.array([quartet_from_index(d, i) for i in range(1, size + 1)], dtype=np.int64)
    l1, l2, l3, l4 = quartets.T
    k1, k2, k3, k4 = quartets.T  # same convention with i -> j
    e11 = (np.outer(l2, k1) - np.outer(l1, k2)) % d
    e12 = (np.outer(l4, k3) - np.outer(l3, k4)) % d
    w = np.exp(2j * np.pi / d)
    return SubmatrixSet(
        d=d,
        m2=w ** ((e11 + e12) % d),
        m11=w**e11,
        m12=w**e12,
        m0=np.ones((size, size), dtype=complex),
    )


# ---- verification reports ---------------------------------------------------


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    d: int
    residual: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"property": self.name, "d": self.d, "residual": self.residual, "pass": self.passed}
        if self.detail:
            out["detail"] = self.detail
        return out


def _rel_fro(lhs, rhs) -> float:
    scale = max(1.0, np.linalg.norm(rhs, "fro"))
    return float(np.linalg.norm(lhs - rhs, "fro") / scale)


def verify_properties(d: int, tol: float = 1e-9) -> list[PropertyCheck]:
    """Check the six structural identities of the conjugation submatrices.

    Residuals are Frobenius norms relative to the right-hand side (matrix
    magnitudes grow like powers of d^2-1, so absolute norms would drown in
    float64 rounding for the larger d and k).
    """
    s = submatrices(d)
    m = d * d - 1
    mats = {"m2": s.m2, "m11": s.m11, "m12": s.m12, "m0": s.m0}
    checks = []

    res = max(
        _rel_fro(a @ b, b @ a) for a, b in itertools.combinations(mats.values(), 2)
    )
    checks.append(PropertyCheck("S1", d, res, res < tol, {"pairs": 6}))

    res = max(_rel_fro(s.m11 @ s.m12, s.m0), _rel_fro(s.m2 @ s.m0, s.m0))
    checks.append(PropertyCheck("S2", d, res, res < tol))

    res = max(_rel_fro(s.m11 @ s.m0, -m * s.m0), _rel_fro(s.m12 @ s.m0, -m * s.m0))
    checks.append(PropertyCheck("S3", d, res, res < tol))

    res = _rel_fro(s.m0 @ s.m0, m * m * s.m0)
    checks.append(PropertyCheck("S4", d, res, res < tol))

    for name, mat in (("S5", s.m11), ("S6", s.m12)):
        for k in (2, 3, 4):
            lhs = np.linalg.matrix_power(mat, k)
            rhs = (-1) ** (k - 1) * m ** (k - 1) * np.linalg.matrix_power(s.m2, k - 1) @ mat
            res = _rel_fro(lhs, rhs)
            checks.append(PropertyCheck(f"{name}[k={k}]", d, res, res < tol))
    return checks


def _eig_membership(mat, allowed, tol) -> tuple[float, bool]:
    evals = np.linalg.eigvals(mat)
    allowed = np.asarray(allowed, dtype=complex)
    dist = np.abs(evals[:, None] - allowed[None, :]).min(axis=1)
    worst = float(dist.max())
    return worst, worst < tol


def verify_eigenvalues(d: int, tol: float = 1e-7) -> list[PropertyCheck]:
    """Eigenvalues must fall in the structural sets for each submatrix."""
    s = submatrices(d)
    m = d * d - 1
    sets = {
        "m2": (s.m2, [1, -1, d, -d, d * d, -d * d]),
        "m11": (s.m11, [0, m, -m, d * m, -d * m]),
        "m12": (s.m12, [0, m, -m, d * m, -d * m]),
        "m0": (s.m0, [0, m * m]),
    }
    checks = []
    for name, (mat, allowed) in sets.items():
        worst, ok = _eig_membership(mat, allowed, tol)
        checks.append(PropertyCheck(f"eigenvalues[{name}]", d, worst, ok, {"allowed": allowed}))
    return checks


def _default_row_keys(d: int, n: int) -> list[RowKey]:
    pairs = [(1, 2)]
    if n >= 3:
        pairs.append((1, 3))
    nonzero = [(a, b) for a in range(d) for b in range(d) if (a, b) != (0, 0)]
    return [(i, j, *li, *lj) for (i, j) in pairs for li in nonzero for lj in nonzero]


def verify_row_sums(d, n, rows=None, cap: int = 10**6, tol_scale: float = 1e-8) -> list[PropertyCheck]:
    """Summing a coupling's phase over all d^(2n) words must give exactly zero."""
    check_dimension(d)
    total_words = d ** (2 * n)
    if total_words > cap:
        raise ValueError(f"d^(2n) = {total_words} exceeds enumeration cap {cap}")
    if rows is None:
        rows = _default_row_keys(d, n)
    words = enumerate_words(d, n)
    matrix = build_matrix(rows, words)
    sums = np.abs(matrix.entries.sum(axis=1))
    worst = float(sums.max())
    bound = tol_scale * total_words
    return [
        PropertyCheck(
            "row_sum",
            d,
            worst,
            worst < bound,
            {"n": n, "rows": len(rows), "words": total_words},
        )
    ]


def verify_determinant(d: int, tol: float = 1e-7) -> list[PropertyCheck]:
    """The two-qudit conjugation block for one coupling family is invertible.

    Its eigenvalues all lie in {±1, ±d, ±d^2}; snapping them to that set gives
    an exact integer determinant whose residue mod d^2-1 is a unit, matching
    the modular nonvanishing argument.  Rank is confirmed with a pivoted QR.
    """
    s = submatrices(d)
    size = s.m2.shape[0]
    evals = np.linalg.eigvals(s.m2)
    allowed = np.array([1, -1, d, -d, d * d, -d * d])
    nearest = allowed[np.abs(evals[:, None] - allowed[None, :]).argmin(axis=1)]
    snap_res = float(np.abs(evals - nearest).max())

    det_int = 1
    for v in nearest:
        det_int *= int(v)
    mod = det_int % (d * d - 1)

    sign, logabs = np.linalg.slogdet(s.m2)
    log_res = abs(logabs - math.log(abs(det_int))) / max(1.0, abs(logabs))

    r_diag = np.abs(np.diag(scipy.linalg.qr(s.m2, pivoting=True)[1]))
    rank = int((r_diag > r_diag[0] * size * np.finfo(float).eps).sum())

    return [
        PropertyCheck(
            "determinant[nonzero]",
            d,
            snap_res,
            det_int != 0 and snap_res < tol,
            {"det": str(det_int), "log_residual": log_res},
        ),
        PropertyCheck(
            "determinant[mod]",
            d,
            float(mod == 0),
            mod != 0,
            {"mod": int(mod), "modulus": d * d - 1},
        ),
        PropertyCheck("determinant[rank]", d, float(size - rank), rank == size, {"rank": rank}),
    ]


def run_verifiers(d: int, n_values=(2, 3), properties=None) -> list[PropertyCheck]:
    """All verification suites applicable at the given dimension."""
    checks = list(verify_properties(d))
    if d <= 4:
        checks.extend(verify_eigenvalues(d))
    for n in n_values:
        if d ** (2 * n) <= 10**6:
            checks.extend(verify_row_sums(d, n))
    if d <= 3:
        checks.extend(verify_determinant(d))
    if properties:
        wanted = tuple(properties)
        checks = [c for c in checks if c.name.startswith(wanted)]
    return checks


# ---- spin-basis sign matrix --------------------------------------------------

# Conjugating S_mu by exp(-i*pi*S_nu) flips its sign unless mu == nu, so the
# qubit-style +/-1 matrix drives spin Hamiltonians at any d.  Words assign an
# axis (or None) per site.


def enumerate_axis_words(n: int) -> list[tuple]:
    options = (None, "x", "y", "z")
    return list(itertools.product(options, repeat=n))


def spin_sign_matrix(rows, words) -> np.ndarray:
    """rows are (i, j, mu, nu); entry is the +/-1 pi-pulse conjugation sign."""
    entries = np.ones((len(rows), len(words)))
    for r, (i, j, mu, nu) in enumerate(rows):
        for c, word in enumerate(words):
            sign = 1.0
            axis_i = word[i - 1]
            axis_j = word[j - 1]
            if axis_i is not None and axis_i != mu:
                sign = -sign
            if axis_j is not None and axis_j != nu:
                sign = -sign
            entries[r, c] = sign
    return entries
