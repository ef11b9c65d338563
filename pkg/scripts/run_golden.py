#!/usr/bin/env python3
"""Run every golden scenario in scripts/configs and report the artifacts.

Reruns are byte-identical, so this doubles as a quick determinism check:
run it twice and diff the runs/ tree.
"""

import pathlib
import sys

from qcavity.cli import run
from qcavity.config import parse_config

CONFIG_DIR = pathlib.Path(__file__).parent / "configs"


def main() -> int:
    worst = 0
    for path in sorted(CONFIG_DIR.glob("golden_*.json")):
        print(f"== {path.name}")
        code = run(parse_config(path.read_text()))
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
