"""Model builders: the full ion-cavity Hamiltonian and its reductions.

The chain of models, from most to least detailed:

``full``        two three-level ions (ground 0, qubit partner 1, excited 3)
                coupled to one cavity mode with strength g on the 0-3
                transition, a classical drive Omega on the 1-3 transition of
                ion 1, cavity decay kappa and excited-state decay tau.

``eliminated``  the cavity adiabatically eliminated for strong detuning:
                a nine-level two-ion master equation with an exchange term
                and a collective decay channel, both scaled by
                g^2/(kappa^2 + Delta^2).

``dispersive``  the closed-system limit of ``eliminated`` written in the
                symmetric/antisymmetric excited basis, where the drive
                couples |10> to the shifted |phi+> and unshifted |phi->.

``reduced``     the resonant two-level block {|10>, |phi->} alone, a bare
                Rabi model whose half period realizes the conditional phase.

``geometric``   a four-level variant where two drives address the 1-3 and
                2-3 transitions, supporting an adiabatic dark-state loop.

Sign convention: with the detuning defined as Delta = omega_c - omega3 +
omega0, a cavity above the atomic resonance (Delta > 0) pushes the excited
manifold DOWN, so the eliminated exchange term carries the coefficient
-g^2 Delta/(kappa^2 + Delta^2).  The numerical full-model comparisons in the
test suite pin this sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import (
    HilbertSpec,
    Operator,
    StateVector,
    annihilation,
    basis_state,
    ion_transition,
    superpose,
    tensor,
)

__all__ = [
    "SystemParams",
    "JumpSet",
    "full_hamiltonian",
    "collect_jump_operators",
    "eliminated_generator",
    "dispersive_hamiltonian",
    "reduced_hamiltonian",
    "geometric_hamiltonian",
    "phi_state",
    "bare_frequencies",
    "to_interaction_picture",
]

GATE_LEVELS = (0, 1, 3)


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and frequencies, all in units of the coupling g.

    Frequencies can be given directly (omega0, omega3, omega_c) or through
    the ``detuned`` constructor, which places the rotating frame so that
    only the detuning Delta = omega_c - omega3 + omega0 survives.
    """

    g: float = 1.0
    Omega: float = 0.0
    kappa: float = 0.0
    tau: float = 0.0
    omega0: float = 0.0
    omega3: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self) -> None:
        if self.g < 0:
            raise ValueError(f"coupling g must be non-negative, got {self.g}")
        if self.Omega < 0:
            raise ValueError(f"drive Omega must be non-negative, got {self.Omega}")
        if self.kappa < 0:
            raise ValueError(f"cavity decay kappa must be non-negative, got {self.kappa}")
        if self.tau < 0:
            raise ValueError(f"atomic decay tau must be non-negative, got {self.tau}")
        for name in ("g", "Omega", "kappa", "tau", "omega0", "omega3", "omega_c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"parameter {name} is not finite")

    @classmethod
    def detuned(cls, Delta: float, **kwargs) -> "SystemParams":
        """Frame with omega0 = omega3 = 0 and omega_c = Delta."""
        for key in ("omega0", "omega3", "omega_c"):
            if key in kwargs:
                raise ValueError(f"detuned() fixes {key}; pass Delta only")
        return cls(omega0=0.0, omega3=0.0, omega_c=Delta, **kwargs)

    @property
    def Delta(self) -> float:
        return self.omega_c - self.omega3 + self.omega0

    @property
    def dispersive_shift(self) -> float:
        """Magnitude of the single-ion dispersive shift g^2 Delta/(kappa^2+Delta^2)."""
        self._require_detuned()
        return self.g**2 * abs(self.Delta) / (self.kappa**2 + self.Delta**2)

    @property
    def collective_rate(self) -> float:
        """Cavity-induced collective decay rate 2 g^2 kappa/(kappa^2+Delta^2)."""
        self._require_detuned()
        return 2.0 * self.g**2 * self.kappa / (self.kappa**2 + self.Delta**2)

    def gate_time(self) -> float:
        """Half Rabi period pi*sqrt(2)/Omega of the |10> <-> |phi-> block."""
        if self.Omega <= 0:
            raise ValueError("gate time undefined for Omega = 0")
        return math.pi * math.sqrt(2.0) / self.Omega

    def _require_detuned(self) -> None:
        if self.Delta == 0:
            raise ValueError(
                "Delta = 0: the cavity-eliminated models require a detuned cavity"
            )

    def with_(self, **kwargs) -> "SystemParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class JumpSet:
    """Collapse operators of a master equation, rates absorbed as sqrt(rate)."""

    ops: tuple[Operator, ...] = ()

    def __iter__(self):
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def is_empty(self) -> bool:
        return not self.ops

    def rate_matrix(self) -> np.ndarray:
        """Sum of L+ L over all channels (the anticommutator part of the dissipator)."""
        if self.is_empty:
            raise ValueError("rate_matrix() of an empty jump set")
        dim = self.ops[0].dim
        out = np.zeros((dim, dim), dtype=np.complex128)
        for op in self.ops:
            out += op.mat.conj().T @ op.mat
        return out


def _require_levels(spec: HilbertSpec, needed: tuple[int, ...], what: str) -> None:
    missing = [l for l in needed if l not in spec.ion_levels]
    if missing:
        raise ValueError(
            f"{what} needs ion levels {needed}, but {missing} are absent "
            f"from {spec.ion_levels}"
        )


def full_hamiltonian(params: SystemParams, spec: HilbertSpec) -> Operator:
    """Lab-frame Hamiltonian of two ions exchanging photons with the cavity.

    H = omega0 (s00_1 + s00_2) + omega3 (s33_1 + s33_2) + omega_c a+ a
        + g [a+ (s03_1 + s03_2) + a (s30_1 + s30_2)]
        + Omega (s31_1 + s13_1)

    The drive addresses ion 1 only.  Hermitian by construction.
    """
    if not spec.has_cavity:
        raise ValueError("full_hamiltonian needs a cavity factor in the space")
    _require_levels(spec, GATE_LEVELS, "full_hamiltonian")

    nl = spec.n_levels
    eye_ion = Operator(np.eye(nl, dtype=np.complex128), label="1")
    a = annihilation(spec)
    eye_cav = Operator(np.eye(spec.cavity_dim, dtype=np.complex128), label="1")

    def cavity_embedded(op: Operator) -> np.ndarray:
        return tensor(eye_ion, eye_ion, op).mat

    H = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
    for ion in (1, 2):
        H += params.omega0 * ion_transition(0, 0, ion, spec).mat
        H += params.omega3 * ion_transition(3, 3, ion, spec).mat
    H += params.omega_c * cavity_embedded(a.dag() @ a)

    # photon exchange on the 0-3 transition of either ion
    small = {}
    for up, lo in ((0, 3), (3, 0)):
        m = np.zeros((nl, nl), dtype=np.complex128)
        m[spec.level_index(up), spec.level_index(lo)] = 1.0
        small[(up, lo)] = Operator(m, label=f"s{up}{lo}")
    for ion_ops in ((small[(0, 3)], eye_ion), (eye_ion, small[(0, 3)])):
        H += params.g * tensor(ion_ops[0], ion_ops[1], a.dag()).mat
    for ion_ops in ((small[(3, 0)], eye_ion), (eye_ion, small[(3, 0)])):
        H += params.g * tensor(ion_ops[0], ion_ops[1], a).mat

    H += params.Omega * (
        ion_transition(3, 1, 1, spec).mat + ion_transition(1, 3, 1, spec).mat
    )
    return Operator(H, label="H_full")


def collect_jump_operators(params: SystemParams, spec: HilbertSpec) -> JumpSet:
    """Lindblad collapse operators of the full model.

    Cavity decay contributes sqrt(2 kappa) a; each ion loses excited-state
    population at rate 2 tau into both ground levels, contributing
    sqrt(2 tau) s03 and sqrt(2 tau) s13 per ion.  Channels with zero rate
    are omitted so a closed system yields an empty set.
    """
    if not spec.has_cavity:
        raise ValueError("collect_jump_operators describes the full model only")
    _require_levels(spec, GATE_LEVELS, "collect_jump_operators")
    ops: list[Operator] = []
    if params.kappa > 0:
        nl = spec.n_levels
        eye_ion = Operator(np.eye(nl, dtype=np.complex128), label="1")
        a_emb = tensor(eye_ion, eye_ion, annihilation(spec))
        ops.append(Operator(np.sqrt(2 * params.kappa) * a_emb.mat, label="L_cav"))
    if params.tau > 0:
        root = np.sqrt(2 * params.tau)
        for ion in (1, 2):
            for lower in (0, 1):
                sig = ion_transition(lower, 3, ion, spec)
                ops.append(Operator(root * sig.mat, label=f"L_{lower}3_{ion}"))
    return JumpSet(tuple(ops))


def phi_state(sign: int, spec: HilbertSpec) -> StateVector:
    """Symmetric (+) or antisymmetric (-) single-excitation state of the pair.

    |phi+-> = (|30> +- |03>)/sqrt(2); the antisymmetric one is dark with
    respect to the collective cavity coupling.
    """
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    c = 1.0 / np.sqrt(2.0)
    return superpose(
        [c, sign * c],
        [basis_state(spec, 3, 0), basis_state(spec, 0, 3)],
        label="|phi+>" if sign > 0 else "|phi->",
    )


def eliminated_generator(
    params: SystemParams, spec: HilbertSpec
) -> tuple[Operator, JumpSet]:
    """Two-ion master equation with the detuned cavity integrated out.

    Valid for a cavity that starts in vacuum and stays nearly empty.  The
    coherent part combines the drive with the cavity-mediated exchange,

        H = -c_x (s33_1 + s33_2 + s30_1 s03_2 + s03_1 s30_2)
            + Omega (s31_1 + s13_1),
        c_x = g^2 Delta / (kappa^2 + Delta^2),

    where the minus sign reflects that a cavity above resonance (Delta > 0)
    lowers the dressed excited manifold.  Cavity loss becomes a collective
    decay with jump operator sqrt(2 g^2 kappa/(kappa^2+Delta^2)) (s03_1 +
    s03_2); spontaneous emission channels carry over unchanged.
    """
    if spec.has_cavity:
        raise ValueError("eliminated_generator lives on the ion-only space")
    _require_levels(spec, GATE_LEVELS, "eliminated_generator")
    params._require_detuned()

    denom = params.kappa**2 + params.Delta**2
    c_x = params.g**2 * params.Delta / denom

    s33_1 = ion_transition(3, 3, 1, spec)
    s33_2 = ion_transition(3, 3, 2, spec)
    exchange = (
        ion_transition(3, 0, 1, spec) @ ion_transition(0, 3, 2, spec)
        + ion_transition(0, 3, 1, spec) @ ion_transition(3, 0, 2, spec)
    )
    H = -c_x * (s33_1.mat + s33_2.mat + exchange.mat)
    H = H + params.Omega * (
        ion_transition(3, 1, 1, spec).mat + ion_transition(1, 3, 1, spec).mat
    )

    ops: list[Operator] = []
    if params.kappa > 0:
        rate = 2.0 * params.g**2 * params.kappa / denom
        collective = (
            ion_transition(0, 3, 1, spec).mat + ion_transition(0, 3, 2, spec).mat
        )
        ops.append(Operator(np.sqrt(rate) * collective, label="L_coll"))
    if params.tau > 0:
        root = np.sqrt(2 * params.tau)
        for ion in (1, 2):
            for lower in (0, 1):
                sig = ion_transition(lower, 3, ion, spec)
                ops.append(Operator(root * sig.mat, label=f"L_{lower}3_{ion}"))
    return Operator(H, label="H_elim"), JumpSet(tuple(ops))


def dispersive_hamiltonian(params: SystemParams, spec: HilbertSpec) -> Operator:
    """Closed-system dispersive Hamiltonian on the nine-level two-ion space.

    Written in the basis {|00>, |01>, |10>, |11>, |31>, |13>, |33>, |phi+>,
    |phi->}: the doubly and symmetric singly excited states are shifted by
    twice the single-ion shift, |31> and |13> by once, and |phi-> not at
    all.  The drive connects |10> to both |phi+> and |phi-> with weight
    Omega/sqrt(2) and |11> to |31> with weight Omega.  Equal to the
    eliminated generator's coherent part at kappa = 0.
    """
    if spec.has_cavity:
        raise ValueError("dispersive_hamiltonian lives on the ion-only space")
    _require_levels(spec, GATE_LEVELS, "dispersive_hamiltonian")
    params._require_detuned()

    shift = params.g**2 / params.Delta
    phi_p = phi_state(+1, spec).amp
    phi_m = phi_state(-1, spec).amp
    b = {
        "10": basis_state(spec, 1, 0).amp,
        "11": basis_state(spec, 1, 1).amp,
        "31": basis_state(spec, 3, 1).amp,
        "13": basis_state(spec, 1, 3).amp,
        "33": basis_state(spec, 3, 3).amp,
    }

    def proj(v: np.ndarray) -> np.ndarray:
        return np.outer(v, v.conj())

    H = -shift * (
        2.0 * proj(b["33"])
        + 2.0 * proj(phi_p)
        + proj(b["31"])
        + proj(b["13"])
    )
    raising = (
        np.outer(b["33"], b["13"].conj())
        + np.outer(b["31"], b["11"].conj())
        + np.outer(phi_p, b["10"].conj()) / np.sqrt(2.0)
        + np.outer(phi_m, b["10"].conj()) / np.sqrt(2.0)
    )
    H = H + params.Omega * (raising + raising.conj().T)
    return Operator(H, label="H_disp")


def reduced_hamiltonian(params: SystemParams, spec: HilbertSpec) -> Operator:
    """Resonant Rabi block (Omega/sqrt(2)) (|phi-><10| + |10><phi-|).

    Everything outside span{|10>, |phi->} is untouched; evolving for
    t = pi*sqrt(2)/Omega carries |10> to -|10>, which is the conditional
    phase picked up by exactly one computational state.
    """
    if spec.has_cavity:
        raise ValueError("reduced_hamiltonian lives on the ion-only space")
    _require_levels(spec, GATE_LEVELS, "reduced_hamiltonian")
    phi_m = phi_state(-1, spec).amp
    b10 = basis_state(spec, 1, 0).amp
    coupling = np.outer(phi_m, b10.conj()) / np.sqrt(2.0)
    H = params.Omega * (coupling + coupling.conj().T)
    return Operator(H, label="H_red")


def geometric_hamiltonian(
    Omega1: complex, Omega2: complex, spec: HilbertSpec
) -> Operator:
    """Two-drive coupling of |10> and |20> to the antisymmetric state.

    H = (1/sqrt(2)) (Omega2 |phi-><20| + Omega1 |phi-><10|) + h.c.

    For amplitudes Omega1 = -W sin(theta/2) e^{i phi}, Omega2 = W
    cos(theta/2) the state cos(theta/2)|10> + sin(theta/2) e^{i phi}|20>
    is an exact zero eigenvector, which is the dark state transported
    around the adiabatic loop.
    """
    if spec.has_cavity:
        raise ValueError("geometric_hamiltonian lives on the ion-only space")
    _require_levels(spec, (0, 1, 2, 3), "geometric_hamiltonian")
    phi_m = phi_state(-1, spec).amp
    b10 = basis_state(spec, 1, 0).amp
    b20 = basis_state(spec, 2, 0).amp
    raising = (
        complex(Omega2) * np.outer(phi_m, b20.conj())
        + complex(Omega1) * np.outer(phi_m, b10.conj())
    ) / np.sqrt(2.0)
    return Operator(raising + raising.conj().T, label="H_geo")


def bare_frequencies(params: SystemParams, spec: HilbertSpec) -> np.ndarray:
    """Diagonal of the bare Hamiltonian omega0 P0 + omega3 P3 + omega_c a+a.

    These are the phases removed when reporting full-model results in the
    interaction picture.
    """
    diag = np.zeros(spec.dim)
    for l1 in spec.ion_levels:
        for l2 in spec.ion_levels:
            e_ion = 0.0
            for level in (l1, l2):
                if level == 0:
                    e_ion += params.omega0
                elif level == 3:
                    e_ion += params.omega3
            if spec.has_cavity:
                for n in range(spec.cavity_dim):
                    diag[spec.index(l1, l2, n)] = e_ion + params.omega_c * n
            else:
                diag[spec.index(l1, l2)] = e_ion
    return diag


def to_interaction_picture(
    state: np.ndarray, t: float, params: SystemParams, spec: HilbertSpec
) -> np.ndarray:
    """Rotate a lab-frame state at time t into the bare rotating frame.

    psi_I = exp(+i H_0 t) psi, or V rho V+ for a density matrix.
    """
    phases = np.exp(1j * bare_frequencies(params, spec) * t)
    state = np.asarray(state)
    if state.ndim == 1:
        return phases * state
    return (phases[:, None] * state) * phases.conj()[None, :]
