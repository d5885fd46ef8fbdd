"""
The dtnlab command line
=======================

The same pipeline is available from the shell as
``dtnlab {spectrum,evolve,verify}``.  Here the entry point is called
in-process and writes into a temporary directory.
"""
# %%
import csv
import json
import tempfile
from pathlib import Path

from dtnlab.cli import main

out = Path(tempfile.mkdtemp(prefix="dtnlab-"))

code = main(["spectrum", "--domain", "disk", "--resolution", "2", "--refine", "2",
             "--out", str(out)])
with open(out / "spectrum.csv") as fh:
    rows = list(csv.reader(fh))
print("exit", code, "first eigenvalues:", [round(float(r[1]), 4) for r in rows[1:6]])

# %%
code = main(["evolve", "--domain", "annulus", "--times", "0.1,1", "--out", str(out)])
print("exit", code, "files:", sorted(p.name for p in out.glob("kernel_t*.csv")))
print((out / "trace_decay.csv").read_text())

# %%
code = main(["verify", "--domain", "square", "--V", "1", "--out", str(out)])
report = json.loads((out / "report.json").read_text())
print("exit", code, "overall", report["overall"])

# %% [markdown]
# Exit codes: 0 success, 1 input error, 2 spectral-gate violation,
# 3 verification failure.

# %%
print("gate violation exit code:",
      main(["spectrum", "--V=-1*lambda1D", "--out", str(out)]))
