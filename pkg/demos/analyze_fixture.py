"""
Testing a small unbalanced 2x2 experiment
=========================================

Runs all five tests on the bundled fixture: dose (high/low) by diet
(meat/plant), with 6, 6, 9 and 9 animals per cell.
"""

from pathlib import Path

from syncperm import PermutationPlan, ats, csp_test, usp_test, wtps, wts
from syncperm.cli import read_long_csv

fixture = Path(__file__).resolve().parent.parent / "tests" / "data" / "fixture.csv"
d, dose, diet = read_long_csv(fixture, "dose", "diet", "weight")
print("dose levels:", dose, " diet levels:", diet, " sizes:", d.n.tolist())

# the asymptotic tests work for any cell sizes
for e in ("A", "B", "AxB"):
    print(e, "WTS p = %.4f" % wts(d, e).p_value, " ATS p = %.4f" % ats(d, e).p_value)

# pooled permutation of the Wald statistic
print("WTPS, effect A: p =", wtps(d, "A", PermutationPlan("pooled", 5000, seed=1)).p_value)

# synchronized permutations remove the other main effect exactly only when
# n11 = n12 and n21 = n22, which holds here for A and AxB
for e in ("A", "AxB"):
    csp = csp_test(d, e, PermutationPlan("csp", 5000, seed=1, pre_randomize=True))
    usp = usp_test(d, e, PermutationPlan("usp", 5000, seed=1))
    print(e, "CSP p =", csp.p_value, " USP p =", usp.p_value)
