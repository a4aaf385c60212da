#!/usr/bin/env python3
"""Reference values for the statistics tests, computed with scipy.stats.

Run once; the printed numbers are frozen into tests/test_stats.cpp and the
acceptance suite.
"""
import numpy as np
from scipy import stats

FIXTURES = {
    "ratios3": [1.1, 1.2, 1.3],
    "ratios8": [0.97, 1.12, 1.05, 1.21, 0.99, 1.08, 1.15, 1.02],
    "ratios_below": [0.91, 0.95, 1.02, 0.88, 0.97, 0.93],
}
for name, v in FIXTURES.items():
    v = np.array(v)
    t, p = stats.ttest_1samp(v, 1.0)
    n = len(v)
    half = stats.t.ppf(0.975, n - 1) * v.std(ddof=1) / np.sqrt(n)
    print(f"{name}: mean={v.mean():.15g} t={t:.15g} p={p:.15g} ci95={half:.15g}")

x = [0.52, 0.61, 0.47, 0.70, 0.58, 0.66, 0.43, 0.55, 0.62, 0.49]
y = [1.35, 1.02, 1.60, 0.91, 1.21, 1.05, 1.72, 1.18, 0.97, 1.44]
r, p = stats.pearsonr(x, y)
print(f"pearson10: r={r:.15g} p={p:.15g}")
x2 = [1, 2, 3, 4, 5, 6]
y2 = [2.1, 3.9, 6.2, 7.8, 10.1, 12.2]
r, p = stats.pearsonr(x2, y2)
print(f"pearson6: r={r:.15g} p={p:.15g}")
for df in (1, 2, 5, 29, 299):
    print(f"t975 df={df}: {stats.t.ppf(0.975, df):.15g}")
print(f"tcdf(2.0, 3) = {stats.t.cdf(2.0, 3):.15g}")
print(f"tcdf(-1.5, 10) = {stats.t.cdf(-1.5, 10):.15g}")
