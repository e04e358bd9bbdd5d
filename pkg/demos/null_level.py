"""
Type-I error under negative pairing
===================================

Small sample in the high-variance cell: the synchronized tests over-reject.
A reduced version of one null-study grid point (about a minute).
"""

from syncperm import StudyConfig, run_study

config = StudyConfig(settings=(5,), increments=(0,), distributions=("normal",),
                     effects=("A",), n_sim=500, n_perm=500, master_seed=7)
table = run_study(config)

for row in table:
    print(f"{row.method:<5} rejection rate {row.rate:.3f}")
