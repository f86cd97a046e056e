"""Dense execution of schedules and digital circuits with a thermal/gate noise model.

States are vectors (noiseless work) or density matrices (anything noisy).
Noise has three ingredients: per-site thermal relaxation toward |0> with a
cascade of single-step decays at rate 1/t1, depolarizing channels calibrated
to a given average gate fidelity, and the intrinsic error of applying gates
while the analog Hamiltonian stays on (the banged execution mode).

Density-matrix work at n = 6 qutrits (729-dimensional) is the design target:
analog stretches run in a per-site "superket" layout where the thermal
channel is a mode product and the diagonal Hamiltonian a precomputed phase
mask, and banged gate windows use sparse Krylov propagation instead of dense
matrix exponentials.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.linalg

from .hamiltonian import QuditHamiltonian, blbq_problem, zz_source
from .solver import CompileOptions, Schedule, compile_schedule, gate_count
from .weyl import local_unitary_from_weyl_terms, weyl_operator

DENSITY_CAP = 3**6
PURE_CAP = 2**14

SWEEP_COLUMNS = ("theta", "t_A", "t_A_r", "fidelity_bdaqc", "fidelity_dqc", "gate_count", "block_count")


class ScheduleInvalidError(Exception):
    """A block is too short to host its embedded gate windows."""


@dataclass(frozen=True)
class NoiseModel:
    """Thermalization time, gate duration, and average gate fidelities."""

    t1: float
    single_gate_duration: float
    single_gate_fidelity: float = 1.0
    two_gate_fidelity: float = 1.0

    def __post_init__(self):
        if self.t1 <= 0 or self.single_gate_duration <= 0:
            raise ValueError("t1 and the gate duration must be positive")
        for f in (self.single_gate_fidelity, self.two_gate_fidelity):
            if not 0.0 < f <= 1.0:
                raise ValueError("gate fidelities must lie in (0, 1]")


@dataclass
class QuantumState:
    d: int
    n: int
    data: np.ndarray

    @property
    def dim(self) -> int:
        return self.d**self.n

    @property
    def is_density(self) -> bool:
        return self.data.ndim == 2

    def copy(self) -> "QuantumState":
        return QuantumState(self.d, self.n, self.data.copy())

    def to_density(self) -> "QuantumState":
        if self.is_density:
            return self
        return QuantumState(self.d, self.n, np.outer(self.data, self.data.conj()))


def ghz_state(d: int, n: int, density: bool = False, max_dim: int = PURE_CAP) -> QuantumState:
    """(1/sqrt(d)) sum_k |k...k>, optionally as a density matrix."""
    dim = d**n
    if dim > max_dim:
        raise ValueError(f"dimension {dim} exceeds cap {max_dim}")
    vec = np.zeros(dim, dtype=complex)
    stride = (dim - 1) // (d - 1)
    vec[np.arange(d) * stride] = 1.0 / math.sqrt(d)
    state = QuantumState(d, n, vec)
    return state.to_density() if density else state


def basis_state(d: int, n: int, digits) -> QuantumState:
    vec = np.zeros(d**n, dtype=complex)
    idx = 0
    for k in digits:
        idx = idx * d + int(k)
    vec[idx] = 1.0
    return QuantumState(d, n, vec)


# ---- local operator application -------------------------------------------


def _apply_unitary_axes(tensor: np.ndarray, u: np.ndarray, axes, d: int) -> np.ndarray:
    k = len(axes)
    ut = u.reshape((d,) * (2 * k))
    out = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, range(k), axes)


def _apply_local_unitary(state: QuantumState, u: np.ndarray, sites) -> QuantumState:
    d, n = state.d, state.n
    axes = [s - 1 for s in sites]
    if state.is_density:
        t = state.data.reshape((d,) * (2 * n))
        t = _apply_unitary_axes(t, u, axes, d)
        t = _apply_unitary_axes(t, u.conj(), [n + ax for ax in axes], d)
        return QuantumState(d, n, t.reshape(state.dim, state.dim))
    t = state.data.reshape((d,) * n)
    t = _apply_unitary_axes(t, u, axes, d)
    return QuantumState(d, n, t.reshape(state.dim))


@lru_cache(maxsize=None)
def _weyl_matrix(d: int, label) -> np.ndarray:
    return weyl_operator(d, label)


def _apply_word(state: QuantumState, word, dagger: bool = False) -> QuantumState:
    for site, label in word.labels:
        u = _weyl_matrix(state.d, label)
        state = _apply_local_unitary(state, u.conj().T if dagger else u, [site])
    return state


def _hermitize(state: QuantumState) -> QuantumState:
    if state.is_density:
        state.data = (state.data + state.data.conj().T) / 2.0
    return state


# ---- thermal relaxation -----------------------------------------------------


@lru_cache(maxsize=None)
def _t1_site_channel(d: int, ratio: float) -> np.ndarray:
    """Channel matrix on vec(site rho), row-major, for duration/t1 = ratio.

    Generator: each level k > 0 decays one step k -> k-1 at unit rate; the
    matrix exponential of the vectorized Lindbladian is exact and trace
    preserving, so no step-size error enters here.
    """
    eye = np.eye(d)
    gen = np.zeros((d * d, d * d), dtype=complex)
    for k in range(1, d):
        jump = np.zeros((d, d))
        jump[k - 1, k] = 1.0
        number = jump.T @ jump
        gen += np.kron(jump, jump.conj())
        gen -= 0.5 * (np.kron(number, eye) + np.kron(eye, number.T))
    return scipy.linalg.expm(gen * ratio)


def _to_superket(rho: np.ndarray, d: int, n: int) -> np.ndarray:
    t = rho.reshape((d,) * (2 * n))
    perm = [x for s in range(n) for x in (s, n + s)]
    return np.ascontiguousarray(t.transpose(perm)).reshape((d * d,) * n)


def _from_superket(sk: np.ndarray, d: int, n: int) -> np.ndarray:
    t = sk.reshape((d,) * (2 * n))
    perm = [x for s in range(n) for x in (s, n + s)]
    inverse = np.argsort(perm)
    return np.ascontiguousarray(t.transpose(inverse)).reshape(d**n, d**n)


def _apply_site_channel_sk(sk: np.ndarray, channel: np.ndarray, axis: int) -> np.ndarray:
    # contiguous (left, d^2, right) view; batched GEMM avoids explicit transposes
    shape = sk.shape
    left = int(np.prod(shape[:axis], initial=1))
    right = int(np.prod(shape[axis + 1 :], initial=1))
    view = sk.reshape(left, shape[axis], right)
    return np.matmul(channel, view).reshape(shape)


def apply_t1(state: QuantumState, duration: float, noise: NoiseModel) -> QuantumState:
    """Per-qudit cascade relaxation toward |0> for the given duration."""
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    state = state.to_density()
    if duration == 0 or not math.isfinite(noise.t1):
        return state
    channel = _t1_site_channel(state.d, duration / noise.t1)
    sk = _to_superket(state.data, state.d, state.n)
    for s in range(state.n):
        sk = _apply_site_channel_sk(sk, channel, s)
    return QuantumState(state.d, state.n, _from_superket(sk, state.d, state.n))


def _evolve_analog_t1(
    state: QuantumState, energies: np.ndarray, duration: float, noise: NoiseModel | None
) -> QuantumState:
    """Diagonal Hamiltonian evolution interleaved with relaxation substeps.

    Operator splitting (phase step, then channel step) with substeps no longer
    than the single-gate duration; splitting error is second order in the
    substep and far below the noise scales of interest.
    """
    if duration <= 0:
        return state
    d, n = state.d, state.n
    if noise is None or not math.isfinite(noise.t1):
        u = np.exp(-1j * duration * energies)
        if state.is_density:
            return QuantumState(d, n, u[:, None] * state.data * u.conj()[None, :])
        return QuantumState(d, n, u * state.data)
    state = state.to_density()
    steps = max(1, math.ceil(duration / noise.single_gate_duration))
    dt = duration / steps
    u = np.exp(-1j * dt * energies)
    mask = _to_superket(np.outer(u, u.conj()), d, n)
    channel = _t1_site_channel(d, dt / noise.t1)
    sk = _to_superket(state.data, d, n)
    for _ in range(steps):
        sk *= mask
        for s in range(n):
            sk = _apply_site_channel_sk(sk, channel, s)
    return QuantumState(d, n, _from_superket(sk, d, n))


# ---- depolarizing gate noise --------------------------------------------------


def apply_gate_noise(state: QuantumState, sites, fidelity: float) -> QuantumState:
    """Local depolarizing noise with the given average gate fidelity.

    With mixing weight q = (1 - F) * D / (D - 1) on the maximally mixed
    marginal (equivalently, probability (1 - F)(D + 1)/D of a uniformly
    random non-identity Weyl error), every input state has output fidelity
    exactly F.
    """
    if not 0.0 < fidelity <= 1.0:
        raise ValueError("fidelity must lie in (0, 1]")
    if fidelity == 1.0:
        return state
    state = state.to_density()
    d, n = state.d, state.n
    axes = [s - 1 for s in sites]
    local_dim = d ** len(axes)
    q = (1.0 - fidelity) * local_dim / (local_dim - 1.0)

    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for ax in axes:
        bra[ax] = ket[ax]  # trace the site out
    keep = [ax for ax in range(n) if ax not in axes]
    out_sub = "".join(ket[ax] for ax in keep) + "".join(bra[ax] for ax in keep)
    t = state.data.reshape((d,) * (2 * n))
    marginal = np.einsum(f"{''.join(ket)}{''.join(bra)}->{out_sub}", t)

    mixed = np.zeros_like(t)
    for diag in np.ndindex(*([d] * len(axes))):
        index = [slice(None)] * (2 * n)
        for ax, digit in zip(axes, diag):
            index[ax] = digit
            index[n + ax] = digit
        mixed[tuple(index)] = marginal / local_dim
    out = (1.0 - q) * t + q * mixed
    return QuantumState(d, n, out.reshape(state.dim, state.dim))


# ---- ideal evolution and fidelity ---------------------------------------------


def ideal_evolution(h: QuditHamiltonian, total_time: float, state: QuantumState) -> QuantumState:
    """exp(-i T H) applied exactly (diagonal fast path, else eigendecomposition)."""
    if (h.d, h.n) != (state.d, state.n):
        raise ValueError("Hamiltonian and state shapes disagree")
    if h.is_diagonal:
        energies = h.diagonal_energies()
        u = np.exp(-1j * total_time * energies)
        if state.is_density:
            return QuantumState(h.d, h.n, u[:, None] * state.data * u.conj()[None, :])
        return QuantumState(h.d, h.n, u * state.data)
    evals, vecs = np.linalg.eigh(h.materialize())
    u = (vecs * np.exp(-1j * total_time * evals)) @ vecs.conj().T
    if state.is_density:
        return QuantumState(h.d, h.n, u @ state.data @ u.conj().T)
    return QuantumState(h.d, h.n, u @ state.data)


def state_fidelity(a: QuantumState, b: QuantumState) -> float:
    """Uhlmann fidelity (squared convention): reduces to <psi|rho|psi> when one
    argument is pure and to |<a|b>|^2 when both are."""
    if (a.d, a.n) != (b.d, b.n):
        raise ValueError("states have mismatched shapes")
    if not a.is_density and not b.is_density:
        return float(min(1.0, abs(np.vdot(a.data, b.data)) ** 2))
    if not a.is_density or not b.is_density:
        psi, rho = (a, b) if not a.is_density else (b, a)
        val = float(np.real(psi.data.conj() @ rho.data @ psi.data))
        return float(min(1.0, max(0.0, val)))
    evals, vecs = np.linalg.eigh(a.data)
    sqrt_a = (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.conj().T
    inner = sqrt_a @ b.data @ sqrt_a
    eigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(1.0, np.sqrt(eigs).sum() ** 2))


# ---- schedule execution ---------------------------------------------------------


def _source_energies(source: QuditHamiltonian) -> np.ndarray:
    if not source.is_diagonal:
        raise ValueError("schedule execution currently requires a diagonal (Z-type) source")
    return source.diagonal_energies()


def _layer_unitaries(schedule: Schedule) -> dict:
    return {
        gen.site: local_unitary_from_weyl_terms(schedule.d, gen.terms, scale=schedule.total_time)
        for gen in schedule.final_local_layer
    }


def run_sdaqc(
    schedule: Schedule,
    source: QuditHamiltonian,
    noise: NoiseModel | None = None,
    state: QuantumState | None = None,
) -> QuantumState:
    """Stepwise execution: the source is switched off while gates are applied.

    Per block: conjugating gates, analog evolution for the block duration,
    inverse gates; the final local layer closes the run.  Noiseless execution
    of an exactly compiled schedule reproduces the ideal problem evolution.
    """
    if state is None:
        raise ValueError("an initial state is required")
    if (schedule.d, schedule.n) != (state.d, state.n):
        raise ValueError("schedule and state shapes disagree")
    energies = _source_energies(source)
    noisy = noise is not None
    if noisy:
        state = state.to_density()
    else:
        state = state.copy()

    def gate_layer(word, dagger):
        nonlocal state
        if word.weight == 0:
            return
        state = _apply_word(state, word, dagger=dagger)
        if noisy:
            for site, _ in word.labels:
                state = apply_gate_noise(state, [site], noise.single_gate_fidelity)
            state = apply_t1(state, noise.single_gate_duration, noise)

    for block in schedule.blocks:
        gate_layer(block.word, dagger=False)
        state = _evolve_analog_t1(state, energies, block.duration, noise)
        gate_layer(block.word, dagger=True)

    layer = _layer_unitaries(schedule)
    for site in sorted(layer):
        state = _apply_local_unitary(state, layer[site], [site])
    if noisy and layer:
        for site in sorted(layer):
            state = apply_gate_noise(state, [site], noise.single_gate_fidelity)
        state = apply_t1(state, noise.single_gate_duration, noise)
    return _hermitize(state)


def _is_phase_identity(u: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(u - u[0, 0] * np.eye(u.shape[0]))) < tol)


def _principal_generator(u: np.ndarray, dt: float) -> np.ndarray:
    """Hermitian H with exp(-i dt H) = u, eigenphases folded into (-pi, pi]."""
    tri, vecs = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(tri))
    return (vecs * (-phases / dt)) @ vecs.conj().T


def _junction_unitaries(schedule: Schedule) -> list:
    """Per-junction site -> unitary maps, final local layer merged into the close.

    Junction q applies G_q G_{q-1}^dag per site (identity at the open end);
    the closing junction applies L_s G_Q^dag so the layer costs no extra pulse.
    """
    d = schedule.d
    words = [b.word for b in schedule.blocks]
    layer = _layer_unitaries(schedule)
    junctions = []
    for q in range(len(words) + 1):
        gates = {}
        prev_word = words[q - 1] if q > 0 else None
        next_word = words[q] if q < len(words) else None
        sites = set()
        if prev_word is not None:
            sites |= {s for s, _ in prev_word.labels}
        if next_word is not None:
            sites |= {s for s, _ in next_word.labels}
        if q == len(words):
            sites |= set(layer)
        for site in sorted(sites):
            u = np.eye(d, dtype=complex)
            if prev_word is not None:
                u = u @ _weyl_matrix(d, prev_word.label_at(site)).conj().T
            if next_word is not None:
                u = _weyl_matrix(d, next_word.label_at(site)) @ u
            if q == len(words) and site in layer:
                u = layer[site] @ u
            if not _is_phase_identity(u):
                gates[site] = u
        junctions.append(gates)
    return junctions


_WINDOW_CACHE: "dict[tuple, np.ndarray]" = {}
_WINDOW_CACHE_MAX = 24


def _window_unitary(energies: np.ndarray, gates: dict, dt: float, d: int, n: int) -> np.ndarray:
    """Dense exp(-i dt (H_source + sum_s H_gate(s))), cached by exact content.

    Gate patterns repeat across blocks and sweep points, so the one-off
    eigendecompositions amortize; applying a cached unitary is two GEMMs.
    """
    key = (
        d,
        n,
        float(dt),
        hash(energies.tobytes()),
        tuple((site, u.tobytes()) for site, u in sorted(gates.items())),
    )
    cached = _WINDOW_CACHE.get(key)
    if cached is not None:
        return cached
    h = np.diag(energies.astype(complex))
    for site, u in gates.items():
        gen = _principal_generator(u, dt)
        left = np.eye(d ** (site - 1), dtype=complex)
        right = np.eye(d ** (n - site), dtype=complex)
        h += np.kron(left, np.kron(gen, right))
    evals, vecs = np.linalg.eigh(h)
    unitary = (vecs * np.exp(-1j * dt * evals)) @ vecs.conj().T
    if len(_WINDOW_CACHE) >= _WINDOW_CACHE_MAX:
        _WINDOW_CACHE.pop(next(iter(_WINDOW_CACHE)))
    _WINDOW_CACHE[key] = unitary
    return unitary


def _banged_window(
    state: QuantumState, energies: np.ndarray, gates: dict, dt: float, noise: NoiseModel
) -> QuantumState:
    """Evolve under (source + gate generators) for one gate duration window."""
    d, n = state.d, state.n
    unitary = _window_unitary(energies, gates, dt, d, n)
    rho = unitary @ state.data @ unitary.conj().T
    out = QuantumState(d, n, rho)
    for site in sorted(gates):
        out = apply_gate_noise(out, [site], noise.single_gate_fidelity)
    out = apply_t1(out, dt, noise)
    return _hermitize(out)


def run_bdaqc(
    schedule: Schedule,
    source: QuditHamiltonian,
    noise: NoiseModel,
    state: QuantumState,
) -> QuantumState:
    """Banged execution: gates ride on top of the always-on source Hamiltonian.

    Each junction's merged single-qudit gates are realized as evolution under
    (source + generator) for one gate duration; the analog time inside each
    block shrinks so block wall-clock times match the scheduled durations.
    """
    if (schedule.d, schedule.n) != (state.d, state.n):
        raise ValueError("schedule and state shapes disagree")
    if noise is None:
        raise ValueError("banged execution needs a noise model (use fidelities of 1 for none)")
    energies = _source_energies(source)
    dt = noise.single_gate_duration
    junctions = _junction_unitaries(schedule)
    blocks = schedule.blocks

    budgets = []
    for q, block in enumerate(blocks):
        need = (dt if junctions[q] else 0.0) + (dt if q == len(blocks) - 1 and junctions[q + 1] else 0.0)
        if block.duration + 1e-12 < need:
            raise ScheduleInvalidError(
                f"block {q} duration {block.duration:.3e} cannot host {need:.3e} of gate time"
            )
        budgets.append(block.duration - need)

    state = state.to_density()
    for q, block in enumerate(blocks):
        if junctions[q]:
            state = _banged_window(state, energies, junctions[q], dt, noise)
        state = _evolve_analog_t1(state, energies, budgets[q], noise)
        if q == len(blocks) - 1 and junctions[q + 1]:
            state = _banged_window(state, energies, junctions[q + 1], dt, noise)
    if not blocks and junctions and junctions[0]:
        state = _banged_window(state, energies, junctions[0], dt, noise)
    return _hermitize(state)


# ---- digital baseline ------------------------------------------------------------


def _digital_bricks(n: int) -> list:
    even = [(i, i + 1) for i in range(1, n) if i % 2 == 1]
    odd = [(i, i + 1) for i in range(1, n) if i % 2 == 0]
    return [layer for layer in (even, odd) if layer]


def run_digital(
    n: int,
    theta: float,
    total_time: float,
    noise: NoiseModel | None = None,
    state: QuantumState | None = None,
) -> QuantumState:
    """Brick-wall qutrit circuit for the bilinear-biquadratic chain evolution.

    Each brick is the entangling unitary conjugated by X (x) X so that it
    generates cos(theta) SzSz + sin(theta) (SzSz)^2 on its pair; layers
    commute, so two layers implement the full evolution exactly when
    noiseless.  Depolarizing noise uses the two-gate fidelity on bricks and
    the single-gate fidelity on the conjugation pulses.
    """
    if state is None:
        raise ValueError("an initial state is required")
    if state.d != 3:
        raise ValueError("the digital baseline is defined for qutrits (d = 3)")
    if state.n != n:
        raise ValueError("state size does not match n")
    noisy = noise is not None
    state = state.to_density() if noisy else state.copy()

    m = np.array([1.0, 0.0, -1.0])
    z2 = np.kron(m, m)
    pair_energy = math.cos(theta) * z2 + math.sin(theta) * z2**2
    u_brick = np.diag(np.exp(-1j * total_time * pair_energy))
    xx = np.kron(weyl_operator(3, (0, 1)), weyl_operator(3, (0, 1)))
    u_impl = xx.conj().T @ u_brick @ xx
    x1 = weyl_operator(3, (0, 1))
    x2 = weyl_operator(3, (0, 2))

    def t1_slice():
        nonlocal state
        if noisy:
            state = apply_t1(state, noise.single_gate_duration, noise)

    for layer in _digital_bricks(n):
        for i, j in layer:
            state = _apply_local_unitary(state, x2, [i])
            state = _apply_local_unitary(state, x2, [j])
            if noisy:
                state = apply_gate_noise(state, [i], noise.single_gate_fidelity)
                state = apply_gate_noise(state, [j], noise.single_gate_fidelity)
        t1_slice()
        for i, j in layer:
            state = _apply_local_unitary(state, u_impl, [i, j])
            if noisy:
                state = apply_gate_noise(state, [i, j], noise.two_gate_fidelity)
        t1_slice()
        for i, j in layer:
            state = _apply_local_unitary(state, x1, [i])
            state = _apply_local_unitary(state, x1, [j])
            if noisy:
                state = apply_gate_noise(state, [i], noise.single_gate_fidelity)
                state = apply_gate_noise(state, [j], noise.single_gate_fidelity)
        t1_slice()
    return _hermitize(state) if noisy else state


# ---- theta sweep ------------------------------------------------------------------


def _limit_worker_threads():
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = "1"


def sweep_point(
    theta: float,
    n: int,
    total_time: float,
    noise: NoiseModel,
    options: CompileOptions | None = None,
    schedule_path=None,
) -> dict:
    """Compile and evaluate one theta: banged and digital fidelities vs ideal."""
    options = options or CompileOptions(delta_t=noise.single_gate_duration)
    problem = blbq_problem(n, theta)
    source = zz_source(n, 3)
    schedule = compile_schedule(source, problem, total_time, options, theta=theta)
    if schedule_path is not None:
        schedule.save(schedule_path)

    ideal = ideal_evolution(problem, total_time, ghz_state(3, n))
    rho_b = run_bdaqc(schedule, source, noise, ghz_state(3, n, density=True))
    rho_d = run_digital(n, theta, total_time, noise, ghz_state(3, n, density=True))
    return {
        "theta": theta,
        "t_A": schedule.metadata["total_analog_time"] + schedule.metadata["discarded_time"],
        "t_A_r": schedule.metadata["total_analog_time"],
        "fidelity_bdaqc": state_fidelity(ideal, rho_b),
        "fidelity_dqc": state_fidelity(ideal, rho_d),
        "gate_count": gate_count(schedule),
        "block_count": len(schedule.blocks),
    }


def _sweep_task(payload):
    theta, n, total_time, noise, options, schedule_path = payload
    return sweep_point(theta, n, total_time, noise, options, schedule_path)


def sweep(
    thetas,
    n: int,
    total_time: float,
    noise: NoiseModel,
    options: CompileOptions | None = None,
    workers: int | None = None,
    schedules_dir=None,
) -> list:
    """Evaluate a theta grid; points are independent and may run in parallel."""
    thetas = list(thetas)
    payloads = []
    for idx, theta in enumerate(thetas):
        path = None
        if schedules_dir is not None:
            os.makedirs(schedules_dir, exist_ok=True)
            path = os.path.join(schedules_dir, f"schedule_{idx:03d}.json")
        payloads.append((theta, n, total_time, noise, options, path))
    if workers is None or workers <= 1 or len(thetas) <= 1:
        return [_sweep_task(p) for p in payloads]
    import multiprocessing

    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(
        max_workers=min(workers, len(thetas)), mp_context=ctx, initializer=_limit_worker_threads
    ) as pool:
        return list(pool.map(_sweep_task, payloads))


def format_sweep_table(rows) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                f"{row[col]:.12g}" if isinstance(row[col], float) else str(row[col])
                for col in SWEEP_COLUMNS
            )
        )
    return "\n".join(lines) + "\n"


def write_sweep_table(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_sweep_table(rows))
