"""Phase-gate protocol runner and scoring.

Every model is driven through the same protocol: prepare each of the
four computational inputs (tensored with the cavity vacuum when the
model keeps the cavity), evolve to the gate time, rotate back to the
interaction picture, and read off the 4x4 amplitude matrix on the
computational subspace. The ideal target is the conditional phase gate
diag(1, 1, -1, 1).

Dissipative models are scored through their no-click conditional
amplitudes: the extracted matrix columns then carry norm below one and
the fidelity drops accordingly. Full process tomography under
dissipation is deliberately out of scope.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    IntegrationError,
    StepControl,
    evolve_conditional,
    evolve_schrodinger,
)
from .hilbert import HilbertSpec, _freeze, basis_state
from .models import (
    SystemParams,
    bare_frequencies,
    collect_jump_operators,
    dispersive_hamiltonian,
    eliminated_generator,
    full_hamiltonian,
    reduced_hamiltonian,
)

GATE_MODELS = ("full", "eliminated", "dispersive", "reduced")
COMPUTATIONAL = ((0, 0), (0, 1), (1, 0), (1, 1))
SCAN_AXES = ("Delta", "kappa", "tau", "Omega", "fock_cutoff")


def ideal_phase_gate() -> np.ndarray:
    """The target two-qubit gate: |10> flips sign, everything else holds."""
    return np.diag([1.0, 1.0, -1.0, 1.0]).astype(np.complex128)


def gate_fidelity(extracted: np.ndarray, ideal: np.ndarray) -> float:
    """Process overlap |Tr(ideal+ extracted)|^2 / 16.

    Invariant under a global phase of the extracted matrix; leakage
    leaves the columns sub-unitary, which depresses the score.
    """
    ex = np.asarray(extracted, dtype=np.complex128)
    idl = np.asarray(ideal, dtype=np.complex128)
    if ex.shape != (4, 4) or idl.shape != (4, 4):
        raise ValueError(f"expected 4x4 matrices, got {ex.shape} and {idl.shape}")
    if not np.allclose(idl @ idl.conj().T, np.eye(4), atol=1e-12):
        raise ValueError("ideal gate must be unitary")
    return float(abs(np.trace(idl.conj().T @ ex)) ** 2 / 16.0)


@dataclass(frozen=True)
class GateReport:
    """Outcome of one phase-gate run."""

    model: str
    params: SystemParams
    gate_time: float
    dt: float
    extracted_gate: np.ndarray
    leakage: np.ndarray
    fidelity: float
    phase_10: float

    def __post_init__(self):
        object.__setattr__(self, "extracted_gate", _freeze(self.extracted_gate))
        object.__setattr__(
            self, "leakage", np.asarray(self.leakage, dtype=float).copy()
        )
        self.leakage.setflags(write=False)
        if np.any(self.leakage < 0.0) or np.any(self.leakage > 1.0):
            raise ValueError(f"leakage out of [0, 1]: {self.leakage}")
        if not (0.0 <= self.fidelity <= 1.0):
            raise ValueError(f"fidelity out of [0, 1]: {self.fidelity}")
        norms = np.linalg.norm(self.extracted_gate, axis=0)
        if np.any(norms > 1.0 + 1e-9):
            raise ValueError(f"extracted column norm above 1: {norms}")

    def to_json_dict(self) -> dict:
        p = self.params
        return {
            "model": self.model,
            "fidelity": self.fidelity,
            "phase_10": self.phase_10,
            "gate_time": self.gate_time,
            "dt": self.dt,
            "leakage": [float(x) for x in self.leakage],
            "extracted_gate": [
                [[float(z.real), float(z.imag)] for z in row]
                for row in self.extracted_gate
            ],
            "params": {
                "g": p.g,
                "Omega": p.Omega,
                "kappa": p.kappa,
                "tau": p.tau,
                "omega0": p.omega0,
                "omega3": p.omega3,
                "omega_c": p.omega_c,
            },
        }


def _build(model: str, params: SystemParams, spec: HilbertSpec):
    if model == "full":
        return full_hamiltonian(params, spec), collect_jump_operators(params, spec)
    if model == "eliminated":
        return eliminated_generator(params, spec)
    if model == "dispersive":
        if params.kappa > 0 or params.tau > 0:
            raise ValueError(
                "the dispersive model is coherent only; use model='eliminated'"
                " for kappa or tau > 0"
            )
        return dispersive_hamiltonian(params, spec), None
    if model == "reduced":
        if params.kappa > 0 or params.tau > 0:
            raise ValueError("the reduced model is coherent only")
        return reduced_hamiltonian(params, spec), None
    raise ValueError(f"unknown model {model!r}; expected one of {GATE_MODELS}")


def extract_gate(
    model: str,
    params: SystemParams,
    *,
    t_gate: float | None = None,
    ctrl: StepControl | None = None,
    fock_cutoff: int = 2,
) -> GateReport:
    """Runs the four-input protocol and scores the extracted gate.

    The full model starts each input in the cavity vacuum and reports
    amplitudes in the interaction picture; the effective models live in
    that picture already. t_gate defaults to pi*sqrt(2)/Omega.
    """
    if model == "full":
        spec = HilbertSpec(fock_cutoff=fock_cutoff)
    else:
        spec = HilbertSpec(fock_cutoff=None)
    if t_gate is None:
        t_gate = params.gate_time()
    ctrl = ctrl or StepControl()

    H, jumps = _build(model, params, spec)
    comp_idx = [spec.index(*labels) for labels in COMPUTATIONAL]
    block = np.zeros((spec.dim, 4), dtype=np.complex128)
    for col, idx in enumerate(comp_idx):
        block[idx, col] = 1.0

    if jumps is None or jumps.is_empty:
        traj = evolve_schrodinger(block, H, t_gate, ctrl)
    else:
        traj = evolve_conditional(block, H, jumps, t_gate, ctrl)
    final = np.asarray(traj.final)

    if spec.has_cavity:
        phases = np.exp(1j * bare_frequencies(params, spec) * t_gate)
        final = phases[:, None] * final

    extracted = final[comp_idx, :]
    leakage = np.maximum(0.0, 1.0 - np.sum(np.abs(extracted) ** 2, axis=0))
    fidelity = min(1.0, gate_fidelity(extracted, ideal_phase_gate()))
    return GateReport(
        model=model,
        params=params,
        gate_time=t_gate,
        dt=traj.dt,
        extracted_gate=extracted,
        leakage=leakage,
        fidelity=fidelity,
        phase_10=float(np.angle(extracted[2, 2])),
    )


@dataclass(frozen=True)
class ScanRow:
    axis_value: float
    fidelity: float
    leakage: tuple
    phase_10: float
    status: str


def _point_params(
    axis: str, value: float, base: SystemParams, omega_ratio: float | None
) -> SystemParams:
    if axis == "Delta":
        p = SystemParams.detuned(
            value, g=base.g, Omega=base.Omega, kappa=base.kappa, tau=base.tau
        )
    elif axis == "fock_cutoff":
        p = base
    else:
        p = base.with_(**{axis: value})
    if omega_ratio is not None:
        p._require_detuned()
        p = p.with_(Omega=omega_ratio * p.g**2 / abs(p.Delta))
    return p


def _scan_point(payload) -> ScanRow:
    model, axis, value, base, omega_ratio, ctrl, fock_cutoff = payload
    try:
        p = _point_params(axis, value, base, omega_ratio)
        cutoff = int(value) if axis == "fock_cutoff" else fock_cutoff
        report = extract_gate(model, p, ctrl=ctrl, fock_cutoff=cutoff)
    except (IntegrationError, ArithmeticError):
        nan = float("nan")
        return ScanRow(float(value), nan, (nan,) * 4, nan, "failed")
    return ScanRow(
        float(value),
        report.fidelity,
        tuple(float(x) for x in report.leakage),
        report.phase_10,
        "ok",
    )


def regime_scan(
    axis: str,
    values,
    params: SystemParams,
    model: str,
    *,
    omega_ratio: float | None = None,
    ctrl: StepControl | None = None,
    fock_cutoff: int = 2,
    workers: int = 1,
) -> tuple[ScanRow, ...]:
    """Gate runs along one parameter axis, in input order.

    omega_ratio re-derives Omega = ratio * g^2/Delta at every point so
    a detuning sweep can hold the drive-to-shift ratio fixed. A point
    that fails to integrate yields a row with status 'failed' without
    aborting the rest. Rows are ordered by the input values regardless
    of worker count.
    """
    if axis not in SCAN_AXES:
        raise ValueError(f"unknown scan axis {axis!r}; expected one of {SCAN_AXES}")
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("scan values must be non-empty")
    if any(v <= 0 for v in vals):
        raise ValueError("scan values must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("scan values must be strictly increasing")
    if axis == "fock_cutoff":
        if model != "full":
            raise ValueError("fock_cutoff scans require model='full'")
        if any(v != int(v) for v in vals):
            raise ValueError("fock_cutoff values must be integers")
    if omega_ratio is not None and axis == "Omega":
        raise ValueError("omega_ratio conflicts with an Omega scan")

    payloads = [
        (model, axis, v, params, omega_ratio, ctrl, fock_cutoff) for v in vals
    ]
    if workers <= 1:
        return tuple(_scan_point(pl) for pl in payloads)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return tuple(pool.map(_scan_point, payloads))
