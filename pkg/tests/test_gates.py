"""Gate extraction, scoring, and the regime scanner.

The slow members of this file are the protocol runs that back the
cross-model consistency story (full vs dispersive at matched drive);
they run the real engine at honest step sizes and take seconds.
"""

import math

import numpy as np
import pytest

from qcavity.dynamics import StepControl, propagator_oracle
from qcavity.gates import (
    COMPUTATIONAL,
    GATE_MODELS,
    SCAN_AXES,
    GateReport,
    ScanRow,
    extract_gate,
    gate_fidelity,
    ideal_phase_gate,
    regime_scan,
)
from qcavity.hilbert import HilbertSpec
from qcavity.models import SystemParams, reduced_hamiltonian

IONS = HilbertSpec(fock_cutoff=None)

IDEAL = ideal_phase_gate()


def closed_params(Delta=50.0, Omega=0.05):
    return SystemParams.detuned(Delta, Omega=Omega, kappa=0.0, tau=0.0)


class TestIdealGate:
    def test_matrix(self):
        assert np.array_equal(IDEAL, np.diag([1, 1, -1, 1]).astype(complex))

    def test_unitary_involution(self):
        assert np.array_equal(IDEAL @ IDEAL, np.eye(4, dtype=complex))

    def test_matches_reduced_propagator(self):
        # Dual route: the eigendecomposition propagator of the reduced
        # Hamiltonian at the gate time, restricted to the computational
        # states, must reproduce the target matrix.
        p = closed_params()
        U = propagator_oracle(reduced_hamiltonian(p, IONS), p.gate_time()).mat
        idx = [IONS.index(*lab) for lab in COMPUTATIONAL]
        sub = U[np.ix_(idx, idx)]
        assert np.max(np.abs(sub - IDEAL)) < 1e-9


class TestGateFidelity:
    def test_perfect(self):
        assert gate_fidelity(IDEAL, IDEAL) == 1.0

    def test_global_phase_invariant(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        base = gate_fidelity(m, IDEAL)
        for phase in rng.uniform(0, 2 * math.pi, size=8):
            assert abs(gate_fidelity(np.exp(1j * phase) * m, IDEAL) - base) < 1e-12

    def test_identity_against_target(self):
        # Tr(ideal+ I) = 1 + 1 - 1 + 1 = 2, so F = 4/16.
        assert abs(gate_fidelity(np.eye(4), IDEAL) - 0.25) < 1e-15

    def test_dead_column_costs_seven_sixteenths(self):
        m = IDEAL.copy()
        m[:, 2] = 0.0
        assert abs(gate_fidelity(m, IDEAL) - 9.0 / 16.0) < 1e-15

    def test_zero_matrix(self):
        assert gate_fidelity(np.zeros((4, 4)), IDEAL) == 0.0

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError, match="4x4"):
            gate_fidelity(np.eye(3), IDEAL)

    def test_rejects_nonunitary_target(self):
        with pytest.raises(ValueError, match="unitary"):
            gate_fidelity(IDEAL, 0.5 * IDEAL)


class TestReducedGate:
    def test_exact_truth_table(self):
        rep = extract_gate("reduced", closed_params())
        assert np.max(np.abs(rep.extracted_gate - IDEAL)) < 1e-9
        assert rep.fidelity > 1.0 - 1e-9
        assert abs(abs(rep.phase_10) - math.pi) < 1e-6
        assert np.all(rep.leakage < 1e-9)

    def test_custom_gate_time(self):
        # A quarter period leaves |10> split between the computational
        # subspace and the auxiliary state: visible as leakage.
        p = closed_params()
        rep = extract_gate("reduced", p, t_gate=p.gate_time() / 2.0)
        assert rep.leakage[2] > 0.4
        assert rep.leakage[0] < 1e-12
        assert rep.fidelity < 0.9

    def test_rejects_dissipation(self):
        p = SystemParams.detuned(50.0, Omega=0.05, kappa=0.5, tau=0.0)
        with pytest.raises(ValueError, match="coherent only"):
            extract_gate("reduced", p)

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown model"):
            extract_gate("exact", closed_params())


@pytest.fixture(scope="module")
def strong_shift():
    # Shift-to-drive ratio 20: the regime the effective gate is designed
    # for.
    p = SystemParams.detuned(50.0, Omega=0.001, kappa=0.0, tau=0.0)
    return extract_gate("dispersive", p)


class TestDispersiveGate:
    def test_high_fidelity(self, strong_shift):
        assert strong_shift.fidelity >= 0.99

    def test_00_column_exact(self, strong_shift):
        col = strong_shift.extracted_gate[:, 0]
        assert np.max(np.abs(col - np.array([1, 0, 0, 0]))) < 1e-9

    def test_unitarity_accounting(self, strong_shift):
        # Closed system: whatever leaves a column is leakage, exactly.
        norms2 = np.sum(np.abs(strong_shift.extracted_gate) ** 2, axis=0)
        assert np.max(np.abs(norms2 + strong_shift.leakage - 1.0)) < 1e-6

    def test_conditional_phase(self, strong_shift):
        assert math.cos(strong_shift.phase_10) < -0.99

    def test_eliminated_matches_when_lossless(self):
        p = closed_params()
        a = extract_gate("dispersive", p)
        b = extract_gate("eliminated", p)
        assert np.max(np.abs(a.extracted_gate - b.extracted_gate)) < 1e-12
        assert a.fidelity == pytest.approx(b.fidelity, abs=1e-12)


class TestFullGate:
    def test_tracks_dispersive_at_matched_drive(self):
        # Same drive, ratio Omega/(g^2/Delta) = 0.1, both scored against
        # the same target: the microscopic and effective fidelities must
        # agree to well under a percent.
        p = SystemParams.detuned(50.0, Omega=0.1 / 50.0, kappa=0.0, tau=0.0)
        full = extract_gate("full", p, ctrl=StepControl(dt=1e-3))
        disp = extract_gate("dispersive", p)
        assert abs(full.fidelity - disp.fidelity) < 0.01
        col = full.extracted_gate[:, 0]
        assert np.max(np.abs(col - np.array([1, 0, 0, 0]))) < 1e-9
        norms2 = np.sum(np.abs(full.extracted_gate) ** 2, axis=0)
        assert np.max(np.abs(norms2 + full.leakage - 1.0)) < 1e-6
        assert math.cos(full.phase_10) < -0.99


class TestEliminatedGate:
    def test_damped_columns(self):
        p = SystemParams.detuned(50.0, Omega=0.05, kappa=0.5, tau=0.01)
        rep = extract_gate("eliminated", p)
        norms = np.linalg.norm(rep.extracted_gate, axis=0)
        assert np.all(norms <= 1.0 + 1e-9)
        # |00> never touches a lossy state, so its no-click amplitude
        # survives exactly; the driven |10> column decays.
        assert rep.leakage[0] < 1e-12
        assert rep.leakage[2] > 1e-3
        assert rep.fidelity < 1.0
        assert np.all((rep.leakage >= 0.0) & (rep.leakage <= 1.0))

    def test_dispersive_rejects_dissipation(self):
        p = SystemParams.detuned(50.0, Omega=0.05, kappa=0.5, tau=0.0)
        with pytest.raises(ValueError, match="eliminated"):
            extract_gate("dispersive", p)


class TestRegimeScan:
    def test_detuning_scan_at_fixed_ratio(self):
        # With Omega tied to g^2/Delta the dispersive Hamiltonian is the
        # same matrix up to an overall scale that cancels against the
        # gate time, so every point lands on the same fidelity.
        rows = regime_scan(
            "Delta", [25.0, 50.0, 100.0], closed_params(), "dispersive",
            omega_ratio=0.1,
        )
        assert [r.axis_value for r in rows] == [25.0, 50.0, 100.0]
        assert all(r.status == "ok" for r in rows)
        fids = [r.fidelity for r in rows]
        assert max(fids) - min(fids) < 1e-12
        assert 0.9 < fids[0] < 1.0

    def test_workers_agree(self):
        rows1 = regime_scan(
            "Omega", [0.02, 0.05], closed_params(), "reduced", workers=1
        )
        rows2 = regime_scan(
            "Omega", [0.02, 0.05], closed_params(), "reduced", workers=2
        )
        assert rows1 == rows2

    def test_failed_point_does_not_abort(self):
        # dt chosen so RK4 is stable at the first detuning and blows up
        # at the second: the scanner must record the failure and move on.
        rows = regime_scan(
            "Delta", [5.0, 500.0], closed_params(), "full",
            omega_ratio=0.1, ctrl=StepControl(dt=0.05),
        )
        assert rows[0].status == "ok"
        assert rows[1].status == "failed"
        assert math.isnan(rows[1].fidelity)
        assert math.isnan(rows[1].phase_10)

    def test_fock_cutoff_scan(self):
        rows = regime_scan(
            "fock_cutoff", [2, 3], closed_params(), "full",
            ctrl=StepControl(dt=5e-3),
        )
        assert all(r.status == "ok" for r in rows)
        # The drive barely populates the cavity, so the cutoff hardly
        # matters at integrator accuracy.
        assert abs(rows[0].fidelity - rows[1].fidelity) < 1e-4

    def test_validation(self):
        p = closed_params()
        with pytest.raises(ValueError, match="unknown scan axis"):
            regime_scan("g", [1.0], p, "reduced")
        with pytest.raises(ValueError, match="non-empty"):
            regime_scan("Omega", [], p, "reduced")
        with pytest.raises(ValueError, match="positive"):
            regime_scan("Omega", [-0.1, 0.2], p, "reduced")
        with pytest.raises(ValueError, match="strictly increasing"):
            regime_scan("Omega", [0.2, 0.1], p, "reduced")
        with pytest.raises(ValueError, match="model='full'"):
            regime_scan("fock_cutoff", [2, 3], p, "dispersive")
        with pytest.raises(ValueError, match="integers"):
            regime_scan("fock_cutoff", [2.5], p, "full")
        with pytest.raises(ValueError, match="omega_ratio"):
            regime_scan("Omega", [0.1, 0.2], p, "reduced", omega_ratio=0.1)

    def test_axis_inventory(self):
        assert SCAN_AXES == ("Delta", "kappa", "tau", "Omega", "fock_cutoff")
        assert GATE_MODELS == ("full", "eliminated", "dispersive", "reduced")


class TestGateReport:
    def test_json_shape(self):
        rep = extract_gate("reduced", closed_params())
        d = rep.to_json_dict()
        assert d["model"] == "reduced"
        assert len(d["leakage"]) == 4
        assert len(d["extracted_gate"]) == 4
        assert all(len(row) == 4 for row in d["extracted_gate"])
        assert all(
            isinstance(entry[0], float) and isinstance(entry[1], float)
            for row in d["extracted_gate"] for entry in row
        )
        assert set(d["params"]) == {
            "g", "Omega", "kappa", "tau", "omega0", "omega3", "omega_c"
        }

    def test_frozen_matrix(self):
        rep = extract_gate("reduced", closed_params())
        with pytest.raises(ValueError):
            rep.extracted_gate[0, 0] = 2.0

    def _report(self, **overrides):
        fields = dict(
            model="reduced",
            params=closed_params(),
            gate_time=1.0,
            dt=1e-3,
            extracted_gate=IDEAL.copy(),
            leakage=np.zeros(4),
            fidelity=1.0,
            phase_10=math.pi,
        )
        fields.update(overrides)
        return GateReport(**fields)

    def test_rejects_bad_fidelity(self):
        with pytest.raises(ValueError, match="fidelity"):
            self._report(fidelity=1.5)

    def test_rejects_bad_leakage(self):
        with pytest.raises(ValueError, match="leakage"):
            self._report(leakage=np.array([0.0, -0.2, 0.0, 0.0]))

    def test_rejects_overlong_columns(self):
        with pytest.raises(ValueError, match="column norm"):
            self._report(extracted_gate=2.0 * IDEAL)

    def test_scanrow_fields(self):
        row = ScanRow(1.0, 0.5, (0.0,) * 4, math.pi, "ok")
        assert row.axis_value == 1.0
        assert row.status == "ok"
