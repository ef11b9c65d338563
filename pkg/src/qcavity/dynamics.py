"""Fixed-step RK4 integration for Schrodinger and Lindblad dynamics.

The two public integrators share one discipline: the step is fixed and
chosen once (explicitly or by the 1e-3/max(|H|, rates) rule), the state
is checked against its invariants at every sampled frame, and nothing
is ever silently renormalized. Density matrices are re-Hermitized after
each step because the symmetric update preserves Hermiticity only up to
roundoff; the largest pre-correction asymmetry seen during the run is
reported on the trajectory so drift stays observable.

An eigendecomposition propagator is provided as an independent oracle
for time-independent Hamiltonians. It shares no code with the RK4 path
on purpose: agreement between the two is the core correctness check of
this package.

Density-matrix integration operates directly on the matrix rather than
on a vectorized superoperator; at the dimensions used here (≤ 48) the
direct form is faster and keeps the Hermitian symmetry explicit.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import _kernels
from .hilbert import DensityMatrix, Operator, StateVector, _freeze
from .models import JumpSet

# Positivity band for sampled density-matrix frames. Monitored, never
# projected: a frame outside the band aborts the run.
POSITIVITY_ATOL = 1e-6

DEFAULT_STEP_SCALE = 1e-3
AUTO_FRAME_TARGET = 200

HamiltonianLike = Union[Operator, np.ndarray, Callable[[float], np.ndarray]]


class IntegrationError(RuntimeError):
    """Raised when a run leaves its tolerance band; carries the time."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


@dataclass(frozen=True)
class StepControl:
    """Integration knobs.

    dt: base step; None selects 1e-3/max(|H|, rates).
    record_every: sampling stride in steps; None aims for ~200 frames.
    trace_tolerance: allowed |Tr rho - 1| (or norm drift) before abort.
    richardson_check: rerun at dt/2 and report the max frame deviation.
    """

    dt: float | None = None
    record_every: int | None = None
    trace_tolerance: float = 1e-6
    richardson_check: bool = False

    def __post_init__(self):
        if self.dt is not None and not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if not (self.trace_tolerance > 0):
            raise ValueError("trace_tolerance must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Sampled run: strictly increasing times with matching states.

    states holds DensityMatrix frames for master runs, StateVector
    frames for single-state Schrodinger runs, and bare (dim, ncols)
    arrays for block or conditional (decaying-norm) runs. herm_drift is
    the largest per-step pre-correction asymmetry (master runs only).
    richardson_error is filled when the control asked for the
    step-halving check.
    """

    times: tuple[float, ...]
    states: tuple
    generator: str
    dt: float
    n_steps: int
    trace_tolerance: float
    herm_drift: float = 0.0
    richardson_error: float | None = None

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self):
        return self.states[-1]


def lindblad_rhs(rho, H, jumps: JumpSet | None = None) -> np.ndarray:
    """Right-hand side -i[H, rho] + sum_L (L rho L+ - (1/2){L+L, rho}).

    Plain matrix arithmetic, independent of the compiled kernels; the
    test suite cross-checks the two routes against each other.
    """
    r = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    h = H.mat if isinstance(H, Operator) else np.asarray(H)
    if r.shape != h.shape:
        raise ValueError(
            f"dimension mismatch: state is {r.shape[0]}-dim, H is {h.shape[0]}-dim"
        )
    out = -1j * (h @ r - r @ h)
    if jumps is not None:
        for op in jumps:
            L = op.mat
            if L.shape != r.shape:
                raise ValueError(
                    f"dimension mismatch: state is {r.shape[0]}-dim,"
                    f" jump '{op.label}' is {L.shape[0]}-dim"
                )
            LdL = L.conj().T @ L
            out += L @ r @ L.conj().T - 0.5 * (LdL @ r + r @ LdL)
    return out


def _as_hamiltonian(H: HamiltonianLike):
    """Returns (matrix or None, callable or None, label)."""
    if isinstance(H, Operator):
        return H.mat, None, H.label
    if callable(H):
        return None, H, getattr(H, "label", "H(t)")
    arr = np.asarray(H, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"Hamiltonian must be square, got shape {arr.shape}")
    return arr, None, "H"


def _coo_pack(jumps: JumpSet | None, dim: int):
    """Concatenated sparse layout of the jump operators for the kernel."""
    rows, cols, vals, off = [], [], [], [0]
    if jumps is not None:
        for op in jumps:
            if op.mat.shape[0] != dim:
                raise ValueError(
                    f"dimension mismatch: state is {dim}-dim,"
                    f" jump '{op.label}' is {op.mat.shape[0]}-dim"
                )
            r, c = np.nonzero(op.mat)
            rows.append(r)
            cols.append(c)
            vals.append(op.mat[r, c])
            off.append(off[-1] + len(r))
    if off[-1] == 0:
        return (
            np.zeros(0, np.int64),
            np.zeros(0, np.int64),
            np.zeros(0, np.complex128),
            np.zeros(1, np.int64),
        )
    return (
        np.concatenate(rows).astype(np.int64),
        np.concatenate(cols).astype(np.int64),
        np.concatenate(vals).astype(np.complex128),
        np.asarray(off, np.int64),
    )


def _rate_matrix(jumps: JumpSet | None, dim: int) -> np.ndarray:
    if jumps is None or jumps.is_empty:
        return np.zeros((dim, dim), np.complex128)
    return jumps.rate_matrix().astype(np.complex128)


def default_step(H: HamiltonianLike, jumps: JumpSet | None = None) -> float:
    """Step-size rule 1e-3 / max(|H|, rates), |.| the spectral norm.

    Time-dependent Hamiltonians are sampled at t = 0; callers with a
    pulse that grows later should set dt explicitly.
    """
    mat, fn, _ = _as_hamiltonian(H)
    if mat is None:
        mat = np.asarray(fn(0.0), dtype=np.complex128)
    scale = float(np.linalg.norm(mat, 2))
    if jumps is not None and not jumps.is_empty:
        scale = max(scale, float(np.linalg.norm(jumps.rate_matrix(), 2)))
    if scale <= 0.0:
        return DEFAULT_STEP_SCALE
    return DEFAULT_STEP_SCALE / scale


def _resolve_grid(t_final: float, dt: float, record_every: int | None):
    """Snap the step count so n*dt lands exactly on t_final."""
    ratio = t_final / dt
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-6:
        n = max(1, int(math.ceil(ratio - 1e-12)))
    dt_used = t_final / n
    stride = record_every or max(1, int(math.ceil(n / AUTO_FRAME_TARGET)))
    idx = list(range(stride, n + 1, stride))
    if not idx or idx[-1] != n:
        idx.append(n)
    return n, dt_used, idx


def _check_finite(arr: np.ndarray, t: float):
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise IntegrationError("non-finite entries in the state", t)


def _wrap_density(mat: np.ndarray, t: float, tol: float) -> DensityMatrix:
    try:
        return DensityMatrix(
            mat.copy(),
            label="rho(t)",
            herm_atol=1e-9,
            trace_atol=tol,
            eig_atol=POSITIVITY_ATOL,
        )
    except ValueError as exc:
        raise IntegrationError(f"state invariant violated: {exc}", t) from None


def evolve_master(
    rho0,
    generator,
    t_final: float,
    ctrl: StepControl = StepControl(),
) -> Trajectory:
    """Integrates d rho/dt = -i[H, rho] + dissipators up to t_final.

    generator is (H, JumpSet) with H an Operator, a matrix, or a
    callable t -> matrix sampled at the RK4 substage times; a bare H
    means a closed system. The trace is checked after every step, the
    sampled frames additionally against Hermiticity and positivity.
    """
    if isinstance(generator, tuple):
        H, jumps = generator
    else:
        H, jumps = generator, None
    if t_final <= 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    Hmat, Hfn, label = _as_hamiltonian(H)

    rho_in = rho0.mat if isinstance(rho0, DensityMatrix) else np.asarray(rho0)
    dim = rho_in.shape[0]
    _wrap_density(np.asarray(rho_in, np.complex128), 0.0, ctrl.trace_tolerance)

    rows, cols, vals, off = _coo_pack(jumps, dim)
    M = _rate_matrix(jumps, dim)
    dt = ctrl.dt if ctrl.dt is not None else default_step(H, jumps)
    n_steps, dt_used, sample_idx = _resolve_grid(t_final, dt, ctrl.record_every)

    rho = np.array(rho_in, dtype=np.complex128, order="C")
    bufs = tuple(np.empty((dim, dim), np.complex128) for _ in range(5))
    times = [0.0]
    frames = [_wrap_density(rho, 0.0, ctrl.trace_tolerance)]
    drift_max = 0.0

    if Hfn is None:
        A = np.ascontiguousarray(-1j * Hmat - 0.5 * M)
        done = 0
        for target in sample_idx:
            drift, bad = _kernels.master_chunk(
                A, rows, cols, vals, off, rho, dt_used,
                target - done, ctrl.trace_tolerance, *bufs,
            )
            drift_max = max(drift_max, drift)
            if bad >= 0:
                raise IntegrationError(
                    f"trace drift beyond {ctrl.trace_tolerance:g}",
                    (done + bad + 1) * dt_used,
                )
            done = target
            t = target * dt_used
            _check_finite(rho, t)
            times.append(t)
            frames.append(_wrap_density(rho, t, ctrl.trace_tolerance))
    else:
        A_lo = np.ascontiguousarray(
            -1j * np.asarray(Hfn(0.0), np.complex128) - 0.5 * M
        )
        done = 0
        for target in sample_idx:
            for step in range(done, target):
                t0 = step * dt_used
                A_mid = np.ascontiguousarray(
                    -1j * np.asarray(Hfn(t0 + 0.5 * dt_used), np.complex128) - 0.5 * M
                )
                A_hi = np.ascontiguousarray(
                    -1j * np.asarray(Hfn(t0 + dt_used), np.complex128) - 0.5 * M
                )
                drift = _kernels.master_step_td(
                    A_lo, A_mid, A_hi, rows, cols, vals, off, rho, dt_used, *bufs
                )
                drift_max = max(drift_max, drift)
                tr = float(np.trace(rho).real)
                if not (abs(tr - 1.0) <= ctrl.trace_tolerance):
                    raise IntegrationError(
                        f"trace drift beyond {ctrl.trace_tolerance:g}", t0 + dt_used
                    )
                A_lo = A_hi
            done = target
            t = target * dt_used
            _check_finite(rho, t)
            times.append(t)
            frames.append(_wrap_density(rho, t, ctrl.trace_tolerance))

    richardson = None
    if ctrl.richardson_check:
        finer = _aligned(
            StepControl(dt=dt_used / 2, trace_tolerance=ctrl.trace_tolerance),
            sample_idx,
        )
        ref = evolve_master(rho0, generator, t_final, finer)
        richardson = _frame_deviation(frames, ref.states)

    return Trajectory(
        times=tuple(times),
        states=tuple(frames),
        generator=label if jumps is None or jumps.is_empty else f"{label}+dissipation",
        dt=dt_used,
        n_steps=n_steps,
        trace_tolerance=ctrl.trace_tolerance,
        herm_drift=drift_max,
        richardson_error=richardson,
    )


def _aligned(ctrl: StepControl, sample_idx) -> StepControl:
    """Control for the half-step rerun sampling at the same times."""
    stride = (sample_idx[0] if len(sample_idx) == 1 else sample_idx[1] - sample_idx[0])
    return StepControl(
        dt=ctrl.dt,
        record_every=2 * stride,
        trace_tolerance=ctrl.trace_tolerance,
    )


def _frame_deviation(frames_a, frames_b) -> float:
    worst = 0.0
    for a, b in zip(frames_a, frames_b):
        ma = a.mat if isinstance(a, DensityMatrix) else None
        if ma is not None:
            worst = max(worst, trace_distance(a, b))
        else:
            va = a.amp if isinstance(a, StateVector) else a
            vb = b.amp if isinstance(b, StateVector) else b
            worst = max(worst, float(np.linalg.norm(va - vb)))
    return worst


def _evolve_linear(
    psi0,
    H: HamiltonianLike,
    jumps: JumpSet | None,
    t_final: float,
    ctrl: StepControl,
    check_norm: bool,
):
    """Shared core of the Schrodinger and conditional integrators."""
    if t_final <= 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    Hmat, Hfn, label = _as_hamiltonian(H)

    single = isinstance(psi0, StateVector) or np.asarray(psi0).ndim == 1
    amp = psi0.amp if isinstance(psi0, StateVector) else np.asarray(psi0)
    block = np.ascontiguousarray(
        amp.reshape(amp.shape[0], -1), dtype=np.complex128
    ).copy()
    dim = block.shape[0]

    M = _rate_matrix(jumps, dim)
    damped = jumps is not None and not jumps.is_empty
    dt = ctrl.dt if ctrl.dt is not None else default_step(H, jumps)
    n_steps, dt_used, sample_idx = _resolve_grid(t_final, dt, ctrl.record_every)

    def pack(mat):
        if Hfn is None:
            raise AssertionError
        return np.ascontiguousarray(-1j * np.asarray(mat, np.complex128) - 0.5 * M)

    times = [0.0]
    samples = [block.copy()]
    if Hfn is None:
        G = np.ascontiguousarray(-1j * Hmat - 0.5 * M)
        if G.shape[0] != dim:
            raise ValueError(
                f"dimension mismatch: state is {dim}-dim, H is {G.shape[0]}-dim"
            )
        done = 0
        for target in sample_idx:
            bad = _kernels.linear_chunk(
                G, block, dt_used, target - done, ctrl.trace_tolerance, check_norm
            )
            if bad >= 0:
                raise IntegrationError(
                    f"norm drift beyond {ctrl.trace_tolerance:g}",
                    (done + bad + 1) * dt_used,
                )
            done = target
            t = target * dt_used
            _check_finite(block, t)
            times.append(t)
            samples.append(block.copy())
    else:
        G_lo = pack(Hfn(0.0))
        done = 0
        for target in sample_idx:
            for step in range(done, target):
                t0 = step * dt_used
                G_mid = pack(Hfn(t0 + 0.5 * dt_used))
                G_hi = pack(Hfn(t0 + dt_used))
                _kernels.linear_step_td(G_lo, G_mid, G_hi, block, dt_used)
                G_lo = G_hi
            done = target
            t = target * dt_used
            _check_finite(block, t)
            if check_norm:
                norms = np.linalg.norm(block, axis=0)
                if not np.all(np.abs(norms - 1.0) <= ctrl.trace_tolerance):
                    raise IntegrationError(
                        f"norm drift beyond {ctrl.trace_tolerance:g}", t
                    )
            times.append(t)
            samples.append(block.copy())

    if single and check_norm:
        states = tuple(
            StateVector(s[:, 0], norm_atol=ctrl.trace_tolerance) for s in samples
        )
    elif single:
        states = tuple(_freeze(s[:, 0]) for s in samples)
    else:
        states = tuple(_freeze(s) for s in samples)

    richardson = None
    if ctrl.richardson_check:
        finer = _aligned(
            StepControl(dt=dt_used / 2, trace_tolerance=ctrl.trace_tolerance),
            sample_idx,
        )
        ref = _evolve_linear(psi0, H, jumps, t_final, finer, check_norm)
        richardson = _frame_deviation(states, ref.states)

    return Trajectory(
        times=tuple(times),
        states=states,
        generator=label if not damped else f"{label}+no-click",
        dt=dt_used,
        n_steps=n_steps,
        trace_tolerance=ctrl.trace_tolerance,
        richardson_error=richardson,
    )


def evolve_schrodinger(
    psi0, H: HamiltonianLike, t_final: float, ctrl: StepControl = StepControl()
) -> Trajectory:
    """RK4 on d psi/dt = -iH(t) psi.

    psi0 may be a StateVector or a (dim,) / (dim, ncols) array; columns
    evolve independently. The norm of every column is watched against
    trace_tolerance and never silently restored.
    """
    return _evolve_linear(psi0, H, None, t_final, ctrl, check_norm=True)


def evolve_conditional(
    psi0,
    H: HamiltonianLike,
    jumps: JumpSet,
    t_final: float,
    ctrl: StepControl = StepControl(),
) -> Trajectory:
    """No-click conditional evolution under H - (i/2) sum L+L.

    Propagates the amplitude that survives without a single quantum
    jump; the squared norm of each column is that no-click probability,
    so the unit-norm watchdog is off. States are returned as bare
    arrays.
    """
    return _evolve_linear(psi0, H, jumps, t_final, ctrl, check_norm=False)


def propagator_oracle(H: Operator | np.ndarray, t: float) -> Operator:
    """exp(-iHt) by Hermitian eigendecomposition.

    Deliberately independent of the RK4 machinery: this is the oracle
    the integrators are validated against.
    """
    mat, fn, label = _as_hamiltonian(H)
    if fn is not None:
        raise ValueError("propagator_oracle needs a time-independent Hamiltonian")
    if not np.allclose(mat, mat.conj().T, atol=1e-12):
        raise ValueError(f"'{label}' is not Hermitian")
    w, V = np.linalg.eigh(mat)
    U = (V * np.exp(-1j * w * t)) @ V.conj().T
    err = float(np.linalg.norm(U @ U.conj().T - np.eye(len(w)), 2))
    if err > 1e-10:
        raise ArithmeticError(f"propagator lost unitarity ({err:.2e})")
    return Operator(U, label=f"exp(-i*{label}*{t:g})")


StateMetrics = namedtuple("StateMetrics", ["fidelity", "trace_distance", "purity"])


def _as_density(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.mat
    if isinstance(x, StateVector):
        return np.outer(x.amp, x.amp.conj())
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        n = np.linalg.norm(arr)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"not a state: norm {n:.8f} is not 1")
        return np.outer(arr, arr.conj())
    tr = np.trace(arr)
    if abs(tr - 1.0) > 1e-6:
        raise ValueError(f"not a state: trace {tr:.8f} is not 1")
    return arr


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(m)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def state_metrics(x, y) -> StateMetrics:
    """Fidelity, trace distance, and purity of x (pure states promoted).

    fidelity = (Tr sqrt(sqrt(x) y sqrt(x)))^2, trace_distance =
    (1/2)|x - y|_1, purity = Tr x^2.
    """
    a, b = _as_density(x), _as_density(y)
    if a.shape != b.shape:
        raise ValueError(
            f"dimension mismatch: states are {a.shape[0]}-dim and {b.shape[0]}-dim"
        )
    ra = _psd_sqrt(a)
    inner = _psd_sqrt(ra @ b @ ra)
    fid = float(min(1.0, np.trace(inner).real ** 2))
    dist = trace_distance(a, b)
    purity = float(np.trace(a @ a).real)
    return StateMetrics(fid, dist, purity)


def trace_distance(x, y) -> float:
    """(1/2) sum |eigenvalues| of the Hermitian difference x - y."""
    a = x.mat if isinstance(x, DensityMatrix) else _as_density(x)
    b = y.mat if isinstance(y, DensityMatrix) else _as_density(y)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))
