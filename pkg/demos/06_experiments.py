"""Convergence studies through the experiment harness.

Each preset writes a param,rel_error,rate CSV with a JSON metadata sidecar
plus solution CSVs.  The same runs are available from the command line as
``fraclap experiment <preset> --out DIR``.

Run: python demos/06_experiments.py [OUTPUT_DIR]
"""
import sys

from fraclap import run_experiment

out = sys.argv[1] if len(sys.argv) > 1 else None
for preset in ("exp4a_tau_h2", "exp4a_tau_h", "exp4b"):
    result = run_experiment(preset, out=out)
    print(f"== {preset} ({result.elapsed:.1f} s)")
    print(result.report.table())

result = run_experiment("exp2", out=out)
print("== exp2 symmetry checks:", result.report.metadata["checks"])
