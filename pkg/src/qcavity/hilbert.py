"""State space plumbing for two ions sharing one cavity mode.

Every simulation in this package lives on a tensor product
``ion1 (x) ion2 (x) cavity`` with the factors in that fixed order.  Each ion
is a handful of internal levels addressed by their physical labels (0, 1, 3
for the gate models, plus 2 when an auxiliary level is driven), and the
cavity is a Fock ladder truncated at ``fock_cutoff`` photons.  Effective
models that have the cavity already eliminated use the same machinery with
the cavity factor switched off.

Dense complex matrices are used throughout; the largest space built here is
a few dozen dimensions, far below the point where sparsity would pay off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

__all__ = [
    "HilbertSpec",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "tensor",
    "annihilation",
    "ion_transition",
    "basis_state",
    "superpose",
    "reduce_to_ions",
]

# Hard ceiling on any constructed space; dense storage beyond this is a bug,
# not a use case.
DIM_LIMIT = 10_000

NORM_ATOL = 1e-9
HERM_ATOL = 1e-9
TRACE_ATOL = 1e-9
EIG_ATOL = 1e-8


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class HilbertSpec:
    """Shape of the composite space: which ion levels exist, how many photons.

    ``fock_cutoff=None`` describes an ion-only space (cavity eliminated).
    """

    ion_levels: tuple[int, ...] = (0, 1, 3)
    fock_cutoff: int | None = 2

    def __post_init__(self) -> None:
        levels = tuple(self.ion_levels)
        object.__setattr__(self, "ion_levels", levels)
        if len(levels) == 0:
            raise ValueError("ion_levels must not be empty")
        if len(set(levels)) != len(levels):
            raise ValueError(f"ion_levels contains duplicates: {levels}")
        if any((not isinstance(l, int)) or l < 0 for l in levels):
            raise ValueError(f"ion_levels must be non-negative integers, got {levels}")
        if self.fock_cutoff is not None and self.fock_cutoff < 1:
            raise ValueError(
                f"fock_cutoff must be at least 1 (got {self.fock_cutoff}); "
                "use fock_cutoff=None for an ion-only space"
            )
        if self.dim > DIM_LIMIT:
            raise ValueError(
                f"total dimension {self.dim} exceeds the dense-storage limit {DIM_LIMIT}"
            )

    @property
    def n_levels(self) -> int:
        return len(self.ion_levels)

    @property
    def has_cavity(self) -> bool:
        return self.fock_cutoff is not None

    @property
    def cavity_dim(self) -> int:
        return 0 if self.fock_cutoff is None else self.fock_cutoff + 1

    @property
    def ion_dim(self) -> int:
        """Dimension of the two-ion factor."""
        return self.n_levels**2

    @property
    def dim(self) -> int:
        d = self.ion_dim
        return d * self.cavity_dim if self.has_cavity else d

    def level_index(self, label: int) -> int:
        try:
            return self.ion_levels.index(label)
        except ValueError:
            raise ValueError(
                f"ion level {label} not in this space (levels {self.ion_levels})"
            ) from None

    def index(self, l1: int, l2: int, photons: int | None = None) -> int:
        """Flat index of the product basis state |l1, l2, photons>."""
        i1 = self.level_index(l1)
        i2 = self.level_index(l2)
        ion = i1 * self.n_levels + i2
        if not self.has_cavity:
            if photons not in (None, 0):
                raise ValueError(
                    f"photon index {photons} given, but this space has no cavity"
                )
            return ion
        if photons is None:
            photons = 0
        if not 0 <= photons <= self.fock_cutoff:
            raise ValueError(
                f"photon index {photons} exceeds fock_cutoff {self.fock_cutoff}"
            )
        return ion * self.cavity_dim + photons

    def ions_only(self) -> "HilbertSpec":
        return HilbertSpec(ion_levels=self.ion_levels, fock_cutoff=None)

    def basis_labels(self) -> list[str]:
        out = []
        for l1 in self.ion_levels:
            for l2 in self.ion_levels:
                if self.has_cavity:
                    for n in range(self.cavity_dim):
                        out.append(f"|{l1}{l2};{n}>")
                else:
                    out.append(f"|{l1}{l2}>")
        return out


@dataclass(frozen=True)
class Operator:
    """A dense square matrix with a human-readable label.

    Instances are immutable; the backing array is marked read-only at
    construction.  Arithmetic returns new operators and checks dimensions,
    naming both operands on mismatch.
    """

    mat: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        m = np.asarray(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator {self.label!r} is not square: shape {m.shape}")
        object.__setattr__(self, "mat", _freeze(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.mat.conj().T, label=f"{self.label}^")

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.mat - self.mat.conj().T)) <= atol)

    def _check(self, other: "Operator", op: str) -> None:
        if self.dim != other.dim:
            raise ValueError(
                f"dimension mismatch in {op}: {self.label!r} is {self.dim}-dim, "
                f"{other.label!r} is {other.dim}-dim"
            )

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other, "+")
        return Operator(self.mat + other.mat, label=f"{self.label}+{other.label}")

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other, "-")
        return Operator(self.mat - other.mat, label=f"{self.label}-{other.label}")

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.mat * scalar, label=self.label)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other, "@")
        return Operator(self.mat @ other.mat, label=f"{self.label}{other.label}")

    def expectation(self, state: "StateVector | DensityMatrix") -> complex:
        if isinstance(state, StateVector):
            if state.dim != self.dim:
                raise ValueError(
                    f"dimension mismatch: operator {self.label!r} is {self.dim}-dim, "
                    f"state is {state.dim}-dim"
                )
            return complex(np.vdot(state.amp, self.mat @ state.amp))
        if state.dim != self.dim:
            raise ValueError(
                f"dimension mismatch: operator {self.label!r} is {self.dim}-dim, "
                f"state is {state.dim}-dim"
            )
        return complex(np.trace(self.mat @ state.mat))


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state.  Construction rejects unnormalized input.

    norm_atol is overridable for the same reason as the DensityMatrix
    tolerances: long integrated runs sit in a looser band than freshly
    built states.
    """

    amp: np.ndarray
    label: str = ""
    norm_atol: float = field(default=NORM_ATOL, compare=False)

    def __post_init__(self) -> None:
        a = np.asarray(self.amp)
        if a.ndim != 1:
            raise ValueError(f"state {self.label!r} must be a vector, got shape {a.shape}")
        n = np.linalg.norm(a)
        if abs(n - 1.0) > self.norm_atol:
            raise ValueError(
                f"state {self.label!r} is not normalized: |psi| = {n!r}"
            )
        object.__setattr__(self, "amp", _freeze(a))

    @property
    def dim(self) -> int:
        return self.amp.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def overlap(self, other: "StateVector") -> complex:
        if self.dim != other.dim:
            raise ValueError(
                f"dimension mismatch: {self.label!r} is {self.dim}-dim, "
                f"{other.label!r} is {other.dim}-dim"
            )
        return complex(np.vdot(self.amp, other.amp))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amp, self.amp.conj()), label=self.label)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, (numerically) positive matrix.

    The tolerances are overridable because integrated trajectories are held
    to looser positivity bounds than freshly constructed states.
    """

    mat: np.ndarray
    label: str = ""
    herm_atol: float = field(default=HERM_ATOL, compare=False)
    trace_atol: float = field(default=TRACE_ATOL, compare=False)
    eig_atol: float = field(default=EIG_ATOL, compare=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix {self.label!r} is not square: {m.shape}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > self.herm_atol:
            raise ValueError(
                f"density matrix {self.label!r} is not Hermitian: deviation {herm!r}"
            )
        tr = np.trace(m)
        if abs(tr - 1.0) > self.trace_atol:
            raise ValueError(
                f"density matrix {self.label!r} has trace {tr!r}, expected 1"
            )
        lo = float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))))
        if lo < -self.eig_atol:
            raise ValueError(
                f"density matrix {self.label!r} has negative eigenvalue {lo!r}"
            )
        object.__setattr__(self, "mat", _freeze(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def tensor(*factors: Operator | StateVector) -> Operator | StateVector:
    """Kronecker product of operators, or of state vectors, left to right.

    All factors must be of the same kind.  The product dimension is guarded
    by the same ceiling as HilbertSpec.
    """
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    kinds = {type(f) for f in factors}
    if kinds == {Operator}:
        total = int(np.prod([f.dim for f in factors]))
        if total > DIM_LIMIT:
            raise ValueError(f"tensor product dimension {total} exceeds {DIM_LIMIT}")
        mat = reduce(np.kron, [f.mat for f in factors])
        return Operator(mat, label="(x)".join(f.label for f in factors))
    if kinds == {StateVector}:
        total = int(np.prod([f.dim for f in factors]))
        if total > DIM_LIMIT:
            raise ValueError(f"tensor product dimension {total} exceeds {DIM_LIMIT}")
        amp = reduce(np.kron, [f.amp for f in factors])
        return StateVector(amp, label="".join(f.label for f in factors))
    raise TypeError("tensor() factors must be all Operators or all StateVectors")


def annihilation(spec: HilbertSpec) -> Operator:
    """Photon annihilation operator on the bare cavity factor.

    On the truncated ladder the canonical commutator picks up a boundary
    term: [a, a+] is the identity except for the last diagonal entry, which
    equals -n_max.
    """
    if not spec.has_cavity:
        raise ValueError("annihilation operator requested for a space with no cavity")
    n = spec.cavity_dim
    mat = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)
    return Operator(mat, label="a")


def ion_transition(upper: int, lower: int, ion: int, spec: HilbertSpec) -> Operator:
    """|upper><lower| on one ion, embedded in the full composite space.

    ``ion`` is 1 or 2.  The label follows the sigma_{ij} convention, e.g.
    ion_transition(0, 3, 1, spec) is sigma_03 acting on the first ion.
    """
    if ion not in (1, 2):
        raise ValueError(f"ion index must be 1 or 2, got {ion}")
    nl = spec.n_levels
    small = np.zeros((nl, nl), dtype=np.complex128)
    small[spec.level_index(upper), spec.level_index(lower)] = 1.0
    eye = np.eye(nl, dtype=np.complex128)
    if ion == 1:
        ions = np.kron(small, eye)
    else:
        ions = np.kron(eye, small)
    if spec.has_cavity:
        full = np.kron(ions, np.eye(spec.cavity_dim, dtype=np.complex128))
    else:
        full = ions
    return Operator(full, label=f"s{upper}{lower}_{ion}")


def basis_state(spec: HilbertSpec, l1: int, l2: int, photons: int | None = None) -> StateVector:
    """Product basis vector |l1, l2, photons> (photons defaults to vacuum)."""
    amp = np.zeros(spec.dim, dtype=np.complex128)
    amp[spec.index(l1, l2, photons)] = 1.0
    if spec.has_cavity:
        n = 0 if photons is None else photons
        label = f"|{l1}{l2};{n}>"
    else:
        label = f"|{l1}{l2}>"
    return StateVector(amp, label=label)


def superpose(coeffs, states, label: str = "") -> StateVector:
    """Normalized linear combination of state vectors."""
    if len(coeffs) != len(states) or not states:
        raise ValueError("superpose needs matching, non-empty coefficients and states")
    dim = states[0].dim
    amp = np.zeros(dim, dtype=np.complex128)
    for c, s in zip(coeffs, states):
        if s.dim != dim:
            raise ValueError(
                f"dimension mismatch in superpose: {states[0].label!r} is {dim}-dim, "
                f"{s.label!r} is {s.dim}-dim"
            )
        amp += c * s.amp
    n = np.linalg.norm(amp)
    if n == 0:
        raise ValueError("superpose coefficients cancel to the zero vector")
    return StateVector(amp / n, label=label)


def reduce_to_ions(state: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    """Trace out the cavity, returning the ion-ion density matrix.

    Accepts a pure state (vector) or a density matrix on the full space.
    For an ion-only spec the input density matrix is returned as is.
    """
    state = np.asarray(state)
    if not spec.has_cavity:
        if state.ndim == 1:
            return np.outer(state, state.conj())
        return state.copy()
    d_ion, d_cav = spec.ion_dim, spec.cavity_dim
    if state.ndim == 1:
        ps = state.reshape(d_ion, d_cav)
        return ps @ ps.conj().T
    r = state.reshape(d_ion, d_cav, d_ion, d_cav)
    return np.einsum("anbn->ab", r)
