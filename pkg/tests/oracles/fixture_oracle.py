"""Golden values for tests/data/fixture.csv, computed without the package.

Run from the repository root:  python3 tests/oracles/fixture_oracle.py
"""

import csv
import json
from pathlib import Path

import numpy as np
from scipy import stats

DATA = Path(__file__).resolve().parent.parent / "data"
CONTRASTS = {"A": [1, 1, -1, -1], "B": [1, -1, 1, -1], "AxB": [1, -1, -1, 1]}


def load():
    with open(DATA / "fixture.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    la = sorted({r["dose"] for r in rows})
    lb = sorted({r["diet"] for r in rows})
    cells = [[], [], [], []]
    for r in rows:
        cells[2 * la.index(r["dose"]) + lb.index(r["diet"])].append(float(r["weight"]))
    return [np.array(c) for c in cells]


def main():
    cells = load()
    n = np.array([c.size for c in cells], dtype=float)
    N = n.sum()
    m = np.array([c.mean() for c in cells])
    v = np.array([c.var(ddof=1) for c in cells])
    S = np.diag(N * v / n)
    L = np.diag(1 / (n - 1))
    out = {"n": n.astype(int).tolist()}
    for eff, c in CONTRASTS.items():
        C = np.array([c], dtype=float)
        T = C.T @ np.linalg.inv(C @ C.T) @ C
        wts = float(N * (C @ m) @ np.linalg.inv(C @ S @ C.T) @ (C @ m))
        tr = np.trace(T @ S)
        ats = float(N * m @ T @ m / tr)
        f1 = float(tr ** 2 / np.trace(T @ S @ T @ S))
        D = np.diag(np.diag(T))
        f2 = float(tr ** 2 / np.trace(D @ D @ S @ S @ L))
        out[eff] = {
            "WTS": {"statistic": wts, "df1": 1.0, "p_value": float(stats.chi2.sf(wts, 1))},
            "ATS": {"statistic": ats, "df1": f1, "df2": f2, "p_value": float(stats.f.sf(ats, f1, f2))},
        }
    # unbalanced synchronized statistic for A and AxB: opposite-cell sizes as weights
    t = np.array([c.sum() for c in cells])
    out["A"]["sync"] = float((n[2] * t[0] + n[3] * t[1] - n[0] * t[2] - n[1] * t[3]) ** 2)
    out["AxB"]["sync"] = float((n[2] * t[0] - n[3] * t[1] - n[0] * t[2] + n[1] * t[3]) ** 2)
    (DATA / "fixture_golden.json").write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
