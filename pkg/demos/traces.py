"""
Expected traces and their 1/n expansion
=======================================

E Tr(H_G^k) over random covers is a sum over potential walks of exact
rational probabilities.  Each one has an expansion in 1/n.
"""
from fractions import Fraction

import numpy as np

from nbcovers.covers import sample_sigma
from nbcovers.graph import bouquet
from nbcovers.traces import (TracePlan, WalkClassStats, expansion_series, expected_hashimoto_trace_exact,
                             hashimoto_trace, normalized_exact, walk_class_stats)

w2 = bouquet(2)
k = 4
print("Tr(H_B^%d) = %d" % (k, hashimoto_trace(w2, k)))
for n in (10, 20, 40):
    ex = expected_hashimoto_trace_exact(w2, k, n)
    sig = np.stack([sample_sigma(w2, n, seed=0, trial=t) for t in range(3000)])
    tr = TracePlan(w2, k).traces(sig)
    print("n=%3d  exact %s = %.4f   MC %.4f +- %.4f" % (
        n, ex, float(ex), tr.mean(), tr.std(ddof=1) / np.sqrt(len(tr))))

# a figure eight traced at one vertex (walk a b at a single lift) is exactly 1
print(normalized_exact(walk_class_stats(w2, [0, 2], [0, 0]), 100))

# two vertices over one base vertex, three edges over one base edge
st = WalkClassStats({0: 2}, {0: 3})
print("stats", st, "order", st.order)
for r in (1, 2, 3):
    ser = expansion_series(st, r)
    errs = [abs(float(ser.evaluate(n) - normalized_exact(st, n))) * n ** r for n in (50, 100, 200)]
    print("r=%d coeffs %s scaled errors %s" % (r, [str(c) for c in ser.coeffs], np.round(errs, 4)))
print(normalized_exact(st, 100) == Fraction(100, 98))
