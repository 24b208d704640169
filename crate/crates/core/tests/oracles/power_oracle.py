"""Monte-Carlo power oracle for the planted-violation audit.

Independent of the Rust code: its own RNG, scikit-learn logistic fits, scipy
binomial tails and a numpy bootstrap. Run once; the target it writes is what
the acceptance suite checks against.

    python3 power_oracle.py [seeds]
"""
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.stats import binom
from sklearn.linear_model import LogisticRegression

GAP = -0.15
N_PER_GROUP = 500
ALPHA = 0.10
B = 2000
M = 4


def rates(gap):
    opposite = 1.0 if gap < 0 else 0.0
    return [0.5 + 0.5 * gap, 0.5 - 0.5 * gap, 0.5 - 0.5 * gap, 0.5 + opposite * gap]


def draw(rng, gap, n):
    # Cells in order (a, b) = (0,0), (1,0), (0,1), (1,1).
    xs, ys, cells = [], [], []
    for c, p in enumerate(rates(gap)):
        xs.append(rng.standard_normal((n, 2)))
        ys.append(np.where(rng.random(n) < p, 1, -1))
        cells.append(np.full(n, c))
    return np.vstack(xs), np.concatenate(ys), np.concatenate(cells)


def onehot(x, cells):
    a = (cells % 2 == 1).astype(float)
    b = (cells // 2 == 1).astype(float)
    return np.column_stack([x, a, b])


def fit(z, y):
    return LogisticRegression(penalty=None, tol=1e-10, max_iter=10000).fit(z, y)


def one_run(rng):
    xtr, ytr, ctr = draw(rng, GAP, N_PER_GROUP)
    xte, yte, cte = draw(rng, GAP, N_PER_GROUP)
    generic = fit(xtr, ytr)
    pers = fit(onehot(xtr, ctr), ytr)
    rows = cte == 0
    y = yte[rows]
    own = pers.predict(onehot(xte[rows], cte[rows])) != y
    gen = generic.predict(xte[rows]) != y
    d = gen.astype(int) - own.astype(int)
    est = d.mean()
    # McNemar: b = rows the personalized model gets wrong and the generic right.
    b, c = int((d == -1).sum()), int((d == 1).sum())
    p_mc = 1.0 if b + c == 0 else binom.sf(b - 1, b + c, 0.5)
    # Recentered percentile bootstrap of the paired gain.
    idx = rng.integers(0, len(d), size=(B, len(d)))
    star = d[idx].mean(axis=1)
    p_bs = (1 + np.sum(star - est <= est)) / (B + 1)
    flag = lambda p: est < 0 and min(1.0, M * p) <= ALPHA
    return flag(p_mc), flag(p_bs)


def main():
    seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 400
    rng = np.random.default_rng(20240601)
    hits = np.array([one_run(rng) for _ in range(seeds)], dtype=float)
    out = {}
    for name, col in (("mcnemar", 0), ("bootstrap", 1)):
        p = hits[:, col].mean()
        se = math.sqrt(max(p * (1 - p), 1e-12) / seeds)
        # Pre-registered target: three standard errors below the oracle estimate.
        out[name] = {"oracle_power": round(p, 4), "standard_error": round(se, 4), "target": round(max(0.0, p - 3 * se), 4)}
    result = {"gap": GAP, "n_per_group": N_PER_GROUP, "alpha": ALPHA, "bootstrap": B, "oracle_seeds": seeds, "tests": out}
    path = Path(__file__).with_name("power_target.json")
    path.write_text(json.dumps(result, indent=2) + "\n")
    print(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
