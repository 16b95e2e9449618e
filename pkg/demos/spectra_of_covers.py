"""
Spectra of random covers
========================

A random degree-n cover of the bouquet with two loops is 4-regular, so its
Hashimoto spectrum is determined by the adjacency spectrum.  We check that,
check the determinant identity behind it, and look at the new eigenvalues.
"""
import numpy as np

from nbcovers.covers import random_cover
from nbcovers.graph import bouquet, build_graph
from nbcovers.spectra import (adjacency_spectrum, hashimoto_spectrum, ihara_residual,
                              kotani_sunada_check, new_spectrum, regular_hashimoto_prediction, rho_new)

w2 = bouquet(2)
cover = random_cover(w2, 40, seed=1)
g = cover.graph
print(g, "order", g.order)

# quadratic lift of the adjacency spectrum vs the eigensolver
gap = regular_hashimoto_prediction(g).distance(hashimoto_spectrum(g))
print("predicted vs computed Hashimoto spectrum:", gap)

# the identity holds exactly with integer coefficients on small graphs
small = random_cover(w2, 12, seed=2).graph
print("exact residual on a 12-cover:", ihara_residual(small, exact=True))

# new eigenvalues against the Ramanujan bound 2 sqrt(3)
lam = np.sort(new_spectrum(cover).values)
print("largest new |lambda|: %.4f   bound %.4f" % (rho_new(cover), 2 * np.sqrt(3)))
print("old spectrum:", adjacency_spectrum(w2).values)

# irregular base: non-real Hashimoto eigenvalues stay inside sqrt(d_max - 1)
base = build_graph(3, [(0, 1), (1, 2), (2, 0), (0, 1), (0, 0)])
hits = [kotani_sunada_check(random_cover(base, 10, 3, t).graph)[0] for t in range(20)]
print("Kotani-Sunada holds on", sum(hits), "of", len(hits), "covers")
