"""
Power curves for a main effect
==============================

Balanced design with 10 observations per cell and a shift of delta in
factor A. Writes a CSV and one SVG chart to ./power_demo.
"""

from pathlib import Path

from syncperm import StudyConfig, run_study
from syncperm.report import emit_csv, emit_svg

out = Path("power_demo")
out.mkdir(exist_ok=True)

config = StudyConfig(study="power", settings=(1,), distributions=("normal",),
                     conditions=(1,), effects=("A",), n_sim=300, n_perm=300)
table = run_study(config)
emit_csv(table, out / "power.csv")
print(*emit_svg(table, out), sep="\n")

for m in ("WTS", "ATS", "WTPS", "CSP", "USP"):
    curve = [f"{r.rate:.2f}" for r in sorted(table.select(method=m), key=lambda r: r.delta)]
    print(m, " ".join(curve))
