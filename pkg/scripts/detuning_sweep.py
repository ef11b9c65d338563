#!/usr/bin/env python3
"""Gate fidelity of the full model against its dispersive limit.

Sweeps the detuning at fixed Omega/(g^2/Delta) and prints how fast the
full-model gate approaches the dispersive prediction. The step is
pinned, not auto-selected: the auto rule keys on |H| ~ Delta and would
make the large-detuning points needlessly slow.

Usage: detuning_sweep.py [delta ...]    (defaults: 10 20 40)
"""

import sys

from qcavity.dynamics import StepControl
from qcavity.gates import extract_gate
from qcavity.models import SystemParams

RATIO = 0.1
DT = 1e-3


def main(argv) -> int:
    deltas = [float(a) for a in argv] or [10.0, 20.0, 40.0]
    print(f"Omega = {RATIO} g^2/Delta, dt = {DT:g}")
    print(f"{'Delta':>8} {'F_full':>12} {'F_dispersive':>13} {'gap':>10}")
    for delta in deltas:
        p = SystemParams.detuned(delta, Omega=RATIO / delta)
        full = extract_gate("full", p, ctrl=StepControl(dt=DT))
        disp = extract_gate("dispersive", p)
        gap = abs(full.fidelity - disp.fidelity)
        print(
            f"{delta:8g} {full.fidelity:12.8f} {disp.fidelity:13.8f} {gap:10.2e}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
