#!/usr/bin/env python3
"""Run every continuity scenario and write JSON/CSV reports.

Usage::

    python3 scripts/run_scenarios.py [--out-dir reports] [--trivial] [--only p32 kernel]

Prints one summary row per scenario and exits nonzero when any scenario
fails (inapplicable scenarios are reported but do not fail the run).
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from modcalc.cli import main as cli_main  # noqa: E402
from modcalc.harness import SCENARIOS  # noqa: E402
from trivial_configs import TRIVIAL  # noqa: E402


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="reports")
    ap.add_argument("--trivial", action="store_true", help="use the identity-symbol variants")
    ap.add_argument("--only", nargs="+", choices=SCENARIOS)
    args = ap.parse_args(argv)

    import json
    import tempfile

    names = args.only or (tuple(TRIVIAL) if args.trivial else SCENARIOS)
    worst = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name in names:
            cmd = ["verify", name, "--out-dir", args.out_dir]
            if args.trivial and name in TRIVIAL:
                cfg = Path(tmp) / f"{name}.json"
                cfg.write_text(json.dumps(TRIVIAL[name]))
                cmd += ["--config", str(cfg)]
            t0 = time.perf_counter()
            code = cli_main(cmd)
            print(f"  exit={code} elapsed={time.perf_counter() - t0:.1f}s")
            if code in (1, 2, 3):
                worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
