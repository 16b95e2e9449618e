"""
Weighted convolutions of polyexponentials
=========================================

sum over k1 + 2 k2 = k of (d-1)^(k1+k2) is not a polyexponential, but it is
one on each residue class mod 2.
"""
from fractions import Fraction

from nbcovers.polyexp import (Polyexponential, annihilation_check, convolve, weighted_convolve,
                              weighted_example_value)

g = Polyexponential.exponential(3)
res = weighted_convolve([g, g], [1, 2])
print("period", res.closed.S, "valid from k =", res.closed.K)
for k in range(8):
    print(k, res.table[k], weighted_example_value(4, k))

# ordinary convolution stays polyexponential: 3^k * 3^k -> (k + 1) 3^k
h = convolve(g, g)
print([h(k) for k in range(5)])

print("(S - 2)^3 kills 2^k (1 + k + k^2):", annihilation_check(2, 3, [1, 1, 1]))
print("(S - 2)^2 does not:", annihilation_check(2, 2, [1, 1, 1]))
print(Fraction(117) == weighted_example_value(4, 4))
