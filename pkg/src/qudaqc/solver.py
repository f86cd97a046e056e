"""Nonnegative schedule synthesis from the conjugation phase matrix.

The complex system M t = T * (h_p / h_s) is stacked into its real and
imaginary parts and solved for t >= 0 (durations are physical times).  A
linear program minimizing total analog time provides vertex solutions; an
active-set nonnegative least squares pass backs it up.  Feasible solutions
are reduced to a support no larger than the number of real equations and
optionally pruned of blocks too short to implement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .hamiltonian import QuditHamiltonian, check_compatibility
from .phase_matrix import (
    GateWord,
    PhaseMatrix,
    build_matrix,
    enumerate_words,
    x_power_labels,
    z_power_labels,
)
from .weyl import WeylLabel, weyl_product_phase


class CompatibilityError(Exception):
    """The problem requires couplings the source cannot provide."""


class InfeasibleError(Exception):
    """No nonnegative duration vector exists within the given word set."""

    def __init__(self, message, word_policy=None):
        super().__init__(message)
        self.word_policy = word_policy


@dataclass(frozen=True)
class TargetRatio:
    """Right-hand side r with r_q = T * h_p(row) / h_s(row) per coupling row."""

    rows: tuple
    values: np.ndarray


def target_ratio(source: QuditHamiltonian, problem: QuditHamiltonian, total_time: float) -> TargetRatio:
    """Target vector over the source's coupling rows; problem-only rows are rejected."""
    hs = source.coupling_map()
    hp = problem.coupling_map()
    missing = sorted(k for k in hp if k not in hs)
    if missing:
        raise CompatibilityError(
            f"problem has couplings with no matching source Weyl term: {missing}"
        )
    rows = tuple(sorted(hs))
    values = np.array([total_time * hp.get(k, 0j) / hs[k] for k in rows], dtype=complex)
    return TargetRatio(rows, values)


def _stacked(matrix: PhaseMatrix, target: TargetRatio):
    if matrix.rows != tuple(target.rows):
        raise ValueError("phase matrix rows do not match the target rows")
    a = np.vstack([matrix.entries.real, matrix.entries.imag])
    b = np.concatenate([target.values.real, target.values.imag])
    return a, b


def residual_norm(matrix: PhaseMatrix, t: np.ndarray, target: TargetRatio) -> float:
    """Infinity norm of M t - r over the stacked real system."""
    a, b = _stacked(matrix, target)
    return float(np.abs(a @ t - b).max(initial=0.0))


def _tolerance(target: TargetRatio, tol_scale: float) -> float:
    scale = float(np.abs(target.values).max(initial=0.0))
    return tol_scale * max(1.0, scale)


def _polish(a, b, t, support_tol=1e-12):
    """Least-squares refit on the support; keep only if it stays nonnegative."""
    support = t > support_tol * max(1.0, t.max(initial=0.0))
    if not support.any():
        return t
    x, *_ = np.linalg.lstsq(a[:, support], b, rcond=None)
    if x.min(initial=0.0) < -1e-10:
        return t
    refit = np.zeros_like(t)
    refit[support] = np.clip(x, 0.0, None)
    old = np.abs(a @ t - b).max(initial=0.0)
    new = np.abs(a @ refit - b).max(initial=0.0)
    return refit if new <= old else t


_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,  # HiGHS floor
    "dual_feasibility_tolerance": 1e-9,
}


def solve_times(matrix: PhaseMatrix, target: TargetRatio, tol_scale: float = 1e-8) -> np.ndarray:
    """Nonnegative durations with M t = r to within tol_scale * max(1, |r|_inf).

    Minimum-total-time linear program first (vertex solutions are sparse),
    active-set NNLS as fallback.  Raises InfeasibleError when neither meets
    the residual bound.
    """
    a, b = _stacked(matrix, target)
    tol = _tolerance(target, tol_scale)
    candidates = []

    lp = scipy.optimize.linprog(
        np.ones(a.shape[1]),
        A_eq=a,
        b_eq=b,
        bounds=(0, None),
        method="highs",
        options=_LP_OPTIONS,
    )
    if lp.status == 0:
        candidates.append(_polish(a, b, np.clip(lp.x, 0.0, None)))

    if not candidates or np.abs(a @ candidates[0] - b).max(initial=0.0) >= tol:
        t_nnls, _ = scipy.optimize.nnls(a, b)
        candidates.append(_polish(a, b, t_nnls))

    best = min(candidates, key=lambda t: np.abs(a @ t - b).max(initial=0.0))
    if np.abs(a @ best - b).max(initial=0.0) >= tol:
        raise InfeasibleError(
            f"no nonnegative solution within residual {tol:.2e} for {a.shape[1]} words"
        )
    return best


def minimize_gate_weight(
    matrix: PhaseMatrix, target: TargetRatio, t: np.ndarray, tol_scale: float = 1e-8
) -> np.ndarray:
    """Among minimum-total-time solutions, prefer words conjugating fewer sites.

    Second-stage linear program: fix the total time achieved by t and minimize
    the weight-weighted duration.  Deterministic tie-breaking for degenerate
    optimal supports.
    """
    a, b = _stacked(matrix, target)
    tol = _tolerance(target, tol_scale)
    total = float(t.sum())
    # the 1e-7 index term only breaks exact weight ties, toward low column index
    weights = np.array(
        [w.weight + 1e-7 * c for c, w in enumerate(matrix.words)], dtype=float
    )
    a2 = np.vstack([a, np.ones(a.shape[1])])
    b2 = np.concatenate([b, [total]])
    lp = scipy.optimize.linprog(
        weights, A_eq=a2, b_eq=b2, bounds=(0, None), method="highs", options=_LP_OPTIONS
    )
    if lp.status != 0:
        return t
    refined = _polish(a, b, np.clip(lp.x, 0.0, None))
    if np.abs(a @ refined - b).max(initial=0.0) < tol and refined.sum() <= total + max(tol, 1e-9):
        return refined
    return t


def sparsify(matrix: PhaseMatrix, t: np.ndarray, target: TargetRatio) -> np.ndarray:
    """Reduce the support to at most the number of stacked real equations.

    Classic convex-geometry reduction: while the support columns are linearly
    dependent, step along a null vector until some duration hits zero.  The
    product M t is invariant, so the residual is untouched, and the support
    never grows.
    """
    a, _ = _stacked(matrix, target)
    t = np.array(t, dtype=float)
    while True:
        support = np.flatnonzero(t > 0)
        if support.size <= 1:
            return t
        cols = a[:, support]
        u, s, vh = np.linalg.svd(cols, full_matrices=True)
        rank = int((s > s[0] * max(cols.shape) * np.finfo(float).eps).sum())
        if rank == support.size:
            return t
        z = vh[-1]
        if z.max() <= 0:
            z = -z
        ratios = np.where(z > 1e-14, t[support] / np.where(z > 1e-14, z, 1.0), np.inf)
        step = ratios.min()
        hit = int(np.argmin(ratios))
        t[support] = np.clip(t[support] - step * z, 0.0, None)
        t[support[hit]] = 0.0


def prune_short_blocks(t: np.ndarray, delta_t: float, factor: float = 4.0):
    """Zero durations in (0, factor * delta_t); return (pruned, discarded_time)."""
    if delta_t < 0:
        raise ValueError("gate duration must be nonnegative")
    t = np.array(t, dtype=float)
    short = (t > 0) & (t < factor * delta_t)
    discarded = float(t[short].sum())
    t[short] = 0.0
    return t, discarded


# ---- schedules ---------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleBlock:
    word: GateWord
    duration: float


@dataclass(frozen=True)
class LocalGenerator:
    """Per-site Weyl generator of a final-layer gate exp(-i T sum c W)."""

    site: int
    terms: tuple  # ((label, coefficient), ...)


@dataclass(frozen=True)
class Schedule:
    d: int
    n: int
    total_time: float
    blocks: tuple = ()
    final_local_layer: tuple = ()
    metadata: dict = field(default_factory=dict)

    @property
    def total_analog_time(self) -> float:
        return float(sum(b.duration for b in self.blocks))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "T": self.total_time,
            "blocks": [
                {
                    "gates": {str(site): list(label) for site, label in b.word.labels},
                    "duration": b.duration,
                }
                for b in self.blocks
            ],
            "final_local_layer": [
                {
                    "site": gen.site,
                    "terms": [
                        {"l": list(label), "re": c.real, "im": c.imag} for label, c in gen.terms
                    ],
                }
                for gen in self.final_local_layer
            ],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        d, n = data["d"], data["n"]
        blocks = tuple(
            ScheduleBlock(
                GateWord.from_mapping(d, n, {int(s): tuple(lab) for s, lab in item["gates"].items()}),
                float(item["duration"]),
            )
            for item in data.get("blocks", [])
        )
        layer = tuple(
            LocalGenerator(
                item["site"],
                tuple(
                    (tuple(term["l"]), complex(term["re"], term.get("im", 0.0)))
                    for term in item["terms"]
                ),
            )
            for item in data.get("final_local_layer", [])
        )
        return cls(d, n, float(data["T"]), blocks, layer, dict(data.get("metadata", {})))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "Schedule":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class CompileOptions:
    word_policy: str = "auto"  # auto | x_power | z_power | max_weight:2 | full
    delta_t: float | None = None
    pruning_factor: float = 4.0
    trotter_reps: int = 1
    dedup: bool = True
    minimize_gates: bool = True
    residual_tol: float = 1e-8
    max_columns: int = 200_000


def _is_nearest_neighbor_chain(*hamiltonians) -> bool:
    return all(
        t.site_j == t.site_i + 1 for h in hamiltonians for t in h.two_body
    )


def chain_structured_words(d: int, n: int, labels) -> list:
    """Identity, uniform, and period-2 alternating words over the given labels.

    For translation-invariant chain targets this small set is feasible and
    forces a unique minimum-time solution, so schedules vary smoothly with
    the target instead of hopping between degenerate vertices of the full
    word polytope.
    """
    words = [GateWord(d, n)]
    for label in labels:
        words.append(GateWord.from_mapping(d, n, {s: label for s in range(1, n + 1)}))
    for start in (2, 1):  # label on even sites, then on odd sites
        for label in labels:
            words.append(
                GateWord.from_mapping(d, n, {s: label for s in range(start, n + 1, 2)})
            )
    return words


def _word_policies(source, problem, options):
    d, n = source.d, source.n
    policy = options.word_policy
    if policy.startswith("max_weight:"):
        yield policy, enumerate_words(d, n, max_weight=int(policy.split(":")[1]))
        return
    if policy in ("x_power", "z_power"):
        labels = x_power_labels(d) if policy == "x_power" else z_power_labels(d)
        yield policy, enumerate_words(d, n, site_labels=labels)
        return
    if policy == "full":
        if d ** (2 * n) > options.max_columns:
            raise InfeasibleError(
                f"full word set d^(2n) = {d ** (2 * n)} exceeds column cap", word_policy="full"
            )
        yield "full", enumerate_words(d, n)
        return
    if policy != "auto":
        raise ValueError(f"unknown word policy {policy!r}")
    # auto: the conjugation exponent l2*k1 - l1*k2 only sees the word component
    # conjugate to the coupling labels, so Z-type sources need X-power words
    # and X-type sources need Z-power words; anything else widens stepwise.
    # Feasibility of each restriction is validated by the solve itself.
    terms = list(source.two_body) + list(problem.two_body)
    labels = [lab for t in terms for lab in (t.labels[:2], t.labels[2:])]
    conjugate_labels = None
    if labels and all(b == 0 for _, b in labels):
        conjugate_labels, name = x_power_labels(d), "x_power"
    elif labels and all(a == 0 for a, _ in labels):
        conjugate_labels, name = z_power_labels(d), "z_power"
    if conjugate_labels is not None:
        if _is_nearest_neighbor_chain(source, problem):
            yield "chain_structured", chain_structured_words(d, n, conjugate_labels)
        yield name, enumerate_words(d, n, site_labels=conjugate_labels)
    yield "max_weight:2", enumerate_words(d, n, max_weight=2)
    if d ** (2 * n) <= options.max_columns:
        yield "full", enumerate_words(d, n)


def source_terms_commute(source: QuditHamiltonian) -> bool:
    """Pairwise commutation of the source's two-body Weyl terms.

    Two tensor products of Weyl operators commute iff the product of the
    per-site exchange phases is one; only shared sites contribute.
    """
    d = source.d
    terms = list(source.two_body)
    for idx, t1 in enumerate(terms):
        ops1 = {t1.site_i: t1.labels[:2], t1.site_j: t1.labels[2:]}
        for t2 in terms[idx + 1 :]:
            ops2 = {t2.site_i: t2.labels[:2], t2.site_j: t2.labels[2:]}
            exponent = 0
            for site in set(ops1) & set(ops2):
                a = ops1[site]
                b = ops2[site]
                ph_ab, _ = weyl_product_phase(d, a, b)
                ph_ba, _ = weyl_product_phase(d, b, a)
                exponent += np.angle(ph_ab / ph_ba)
            if abs(np.exp(1j * exponent) - 1.0) > 1e-12:
                return False
    return True


def _final_layer(problem: QuditHamiltonian) -> tuple:
    by_site = {}
    for term in problem.one_body:
        by_site.setdefault(term.site, []).append((term.label, term.coefficient))
    return tuple(LocalGenerator(site, tuple(sorted(by_site[site]))) for site in sorted(by_site))


def compile_schedule(
    source: QuditHamiltonian,
    problem: QuditHamiltonian,
    total_time: float,
    options: CompileOptions | None = None,
    theta: float | None = None,
) -> Schedule:
    """Compile the problem evolution exp(-i T H_p) into conjugated source blocks.

    Rows cover the source's two-body support (problem-absent rows are driven
    to zero so nothing uncontrolled survives).  The word set policy widens
    until the solve is feasible; the result is sparsified, optionally pruned,
    ordered by descending duration, and the problem's single-site terms are
    attached as a final local layer.
    """
    options = options or CompileOptions()
    if total_time < 0:
        raise ValueError("total time must be nonnegative")
    if source.one_body:
        raise ValueError("sources with single-site terms are not supported")
    report = check_compatibility(source, problem)
    if not report.compatible:
        raise CompatibilityError(f"problem couples pairs absent from the source: {report.violations}")
    target = target_ratio(source, problem, total_time)

    last_policy = None
    solved = None
    for policy, words in _word_policies(source, problem, options):
        last_policy = policy
        matrix = build_matrix(target.rows, words, dedup=options.dedup)
        try:
            t = solve_times(matrix, target, options.residual_tol)
        except InfeasibleError:
            continue
        solved = (policy, matrix, t)
        break
    if solved is None:
        raise InfeasibleError(
            f"no word policy produced a feasible schedule (last tried: {last_policy})",
            word_policy=last_policy,
        )
    policy, matrix, t = solved

    if options.minimize_gates:
        t = minimize_gate_weight(matrix, target, t, options.residual_tol)
    t = sparsify(matrix, t, target)
    residual = residual_norm(matrix, t, target)

    discarded = 0.0
    threshold = None
    if options.delta_t is not None:
        threshold = options.pruning_factor * options.delta_t
        t, discarded = prune_short_blocks(t, options.delta_t, options.pruning_factor)

    # quantize the sort key so exact ties (up to solver noise) break by column index
    quantum = max(float(t.max(initial=0.0)) * 1e-9, 1e-30)
    order = sorted(np.flatnonzero(t > 0), key=lambda c: (-round(t[c] / quantum), c))
    reps = max(1, int(options.trotter_reps))
    blocks = tuple(
        ScheduleBlock(matrix.words[c], float(t[c]) / reps) for _ in range(reps) for c in order
    )

    schedule = Schedule(
        d=source.d,
        n=source.n,
        total_time=float(total_time),
        blocks=blocks,
        final_local_layer=_final_layer(problem),
        metadata={
            "theta": theta,
            "word_policy": policy,
            "residual": residual,
            "pruning_threshold": threshold,
            "total_analog_time": float(t.sum()),
            "discarded_time": discarded,
            "identity_offset": problem.identity_offset,
            "trotter_reps": reps,
            "source_commuting": source_terms_commute(source),
        },
    )
    return replace(
        schedule,
        metadata={**schedule.metadata, "gate_count_merged": merged_gate_count(schedule)},
    )


def gate_count(schedule: Schedule) -> int:
    """Non-identity single-qudit gates: 2 * weight per block, with the pair
    cancelled wherever adjacent blocks conjugate a site by the same label."""
    blocks = schedule.blocks
    total = sum(2 * b.word.weight for b in blocks)
    for prev, nxt in zip(blocks, blocks[1:]):
        for site, label in prev.word.labels:
            if nxt.word.label_at(site) == label:
                total -= 2
    return total


def merged_gate_count(schedule: Schedule) -> int:
    """Gates when each junction's G_{q+1} G_q^dag is compiled to one pulse per site."""
    words = [GateWord(schedule.d, schedule.n)] + [b.word for b in schedule.blocks]
    words.append(GateWord(schedule.d, schedule.n))
    count = 0
    for prev, nxt in zip(words, words[1:]):
        sites = {s for s, _ in prev.labels} | {s for s, _ in nxt.labels}
        count += sum(1 for s in sites if prev.label_at(s) != nxt.label_at(s))
    return count
