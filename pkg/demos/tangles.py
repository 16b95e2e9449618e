"""
Tangles in random covers
========================

A tangle is a small connected piece of the cover whose Hashimoto radius is
already at least sqrt(rho(H_B)).  Covers containing one cannot be
relatively Ramanujan, and the chance of containing one decays like
n^-eta where eta is the fundamental order.
"""
import numpy as np

from nbcovers.bgraphs import LiftPlan
from nbcovers.covers import sample_sigma
from nbcovers.experiments import loglog_slope
from nbcovers.graph import bouquet
from nbcovers.tangles import fundamental_order, minimal_tangles, tangle_certificates, tangle_threshold

w2 = bouquet(2)
print("threshold sqrt(rho(H_B)) =", tangle_threshold(w2))
print("fundamental order:", fundamental_order(w2))

found, reports = minimal_tangles(w2, 2, strict=True, with_reports=True)
print(len(found), "minimal strict tangles of order < 2")
for rep in reports[:5]:
    print("  ", rep.row())

# for the figure eight as a skeleton: which loop lengths make a tangle
fig8 = bouquet(2)
print("certificates:", tangle_certificates(fig8, w2))

plans = [LiftPlan(t) for t in found]
ns, fr = [25, 50, 100, 200], []
for n in ns:
    sig = np.stack([sample_sigma(w2, n, seed=5, trial=t) for t in range(2000)])
    hit = np.zeros(len(sig), bool)
    for p in plans:
        hit |= p.count(sig) > 0
    fr.append(hit.mean())
    print("n=%4d  P[tangle] ~ %.4f" % (n, fr[-1]))
print("log-log slope: %.3f" % loglog_slope(ns, fr))
