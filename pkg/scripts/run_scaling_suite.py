"""Run the six scaling experiments at their acceptance settings.

Each experiment writes report.json, series.csv and timing.json under
``--out/<experiment>/``; a one-line verdict per acceptance check goes to
stdout.

    python scripts/run_scaling_suite.py --out results --threads 8
"""

import argparse
import json
import os
import time
from pathlib import Path

from skstein.experiments import ExperimentConfig, run_experiment, write_outputs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SUITE = ("local_field", "tap", "cavity", "hamiltonian", "r_law", "high_temp_diagnostic")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=int(os.environ.get("SK_STEIN_THREADS", 1)))
    ap.add_argument("--only", nargs="*", choices=SUITE, default=SUITE)
    args = ap.parse_args()

    failures = 0
    for name in args.only:
        cfg = ExperimentConfig.from_json(CONFIG_DIR / f"{name}.json")
        start = time.perf_counter()
        report = run_experiment(cfg, threads=args.threads)
        elapsed = time.perf_counter() - start
        out = Path(args.out) / name
        write_outputs(report, out)
        (out / "timing.json").write_text(json.dumps({"runtime_seconds": elapsed}))
        slope = report["fitted_slope"]
        print(f"== {name}  slope={slope if slope is None else round(slope, 3)}  {elapsed:.0f}s")
        for c in report["checks"]:
            failures += not c["passed"]
            print(f"   {'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
