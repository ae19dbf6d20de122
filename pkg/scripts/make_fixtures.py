#!/usr/bin/env python3
"""Freeze regression fixtures for the default and identity-symbol scenarios.

Fixtures land in ``$MODCALC_FIXTURES`` or ``tests/fixtures``; each file is
keyed by scenario name and configuration hash, so changing a configuration
never overwrites an unrelated fixture.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from modcalc.harness import SCENARIOS, default_config, freeze_fixture, run_scenario  # noqa: E402
from trivial_configs import TRIVIAL  # noqa: E402


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dir", default=None, help="fixture directory override")
    args = ap.parse_args(argv)
    jobs = [(n, default_config(n)) for n in SCENARIOS]
    jobs += [(n, default_config(n, over)) for n, over in TRIVIAL.items()]
    for name, cfg in jobs:
        res = run_scenario(name, cfg)
        path = freeze_fixture(res, args.dir)
        print(f"{name:11s} {res.status:13s} {path.name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
