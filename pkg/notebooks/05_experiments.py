"""Running a seeded Monte-Carlo sweep and reading its outputs.

The harness writes results.csv, an echo of the configuration that
reproduces the run, and a small SVG plot.  Set JSREC_THREADS to use
several worker processes; results do not depend on it.
"""
import csv
import sys
import tempfile
from pathlib import Path

from jsrec import ExperimentConfig, run_experiment

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="jsrec-demo-"))
cfg = ExperimentConfig(kind="boosted", m=20, n=80, s_values=[9], r_values=[1, 2, 4, 8], trials=100, seed=2024,
                       output_dir=str(out))
run_experiment(cfg)
with open(out / "results.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        print(f"{row['method']:<8} r={row['r']}  empirical {float(row['empirical_rate']):.3f} "
              f"+- {float(row['ci_halfwidth']):.3f}   model {float(row['model_rate']):.3f}")
print("outputs in", out, sorted(p.name for p in out.iterdir()))
