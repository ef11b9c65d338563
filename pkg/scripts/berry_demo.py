#!/usr/bin/env python3
"""Transport the dark state around a cap loop and print the phase ledger.

The interesting comparison is the numeric phase against the two
candidate prefactors: half the enclosed solid angle matches, the full
solid angle does not.

Usage: berry_demo.py [theta0 [T]]    (defaults: 2*pi/3, 2000)
"""

import math
import sys

from qcavity.berry import adiabatic_run, standard_loop
from qcavity.dynamics import StepControl


def wrap(x: float) -> float:
    return math.remainder(x, 2.0 * math.pi)


def main(argv) -> int:
    theta0 = float(argv[0]) if argv else 2.0 * math.pi / 3.0
    T = float(argv[1]) if len(argv) > 1 else 2000.0
    loop = standard_loop(theta0, T)
    rep = adiabatic_run(loop, 1.0, StepControl(dt=5e-3))

    print(f"theta0 = {theta0:.6f}, T = {T:g}, {rep.n_steps} steps")
    print(f"numeric phase           {rep.numeric_phase:+.6f}")
    print(f"-(surface)/2, wrapped   {wrap(-rep.half_surface_integral):+.6f}")
    print(f"-(surface), wrapped     {wrap(-rep.surface_integral):+.6f}")
    print(f"enclosed solid angle    {rep.surface_integral:.6f}")
    print(f"return amplitude        {rep.return_amplitude:.7f}")
    print(f"dynamical phase bound   {rep.dynamical_phase_bound:.2e}")
    print(f"adiabatic leakage       {rep.adiabatic_leakage:.2e}")
    print(f"decoupled phases        {[f'{p:+.2e}' for p in rep.decoupled_phases]}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
