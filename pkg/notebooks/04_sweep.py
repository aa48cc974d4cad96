"""
Where convergence stops
=======================

A sweep over constant delta = eta on a random l_2 target.  Constant
perturbations do not vanish, so beyond a small threshold the worst-case
error injection stalls the algorithm.
"""

# %%
import csv
import io
import tempfile
from contextlib import redirect_stdout
from pathlib import Path

from awcga.cli import main

config = Path(__file__).resolve().parents[1] / "configs" / "sweep_delta_eta.toml"
buf = io.StringIO()
with redirect_stdout(buf):
    main(["sweep", "--config", str(config), "--quiet"])
for row in csv.DictReader(io.StringIO(buf.getvalue())):
    print(f"delta=eta={row['delta']:>5}  {row['verdict']:14s} final residual {float(row['final_residual']):.4g}")

# %%
# Runs are deterministic: the same config and seed give identical bytes.
with tempfile.TemporaryDirectory() as tmp:
    run_cfg = Path(__file__).resolve().parents[1] / "configs" / "convergence_l3.toml"
    a, b = Path(tmp) / "a.csv", Path(tmp) / "b.csv"
    main(["run", "--config", str(run_cfg), "--out", str(a), "--quiet"])
    main(["run", "--config", str(run_cfg), "--out", str(b), "--quiet"])
    print("identical traces:", a.read_bytes() == b.read_bytes())
