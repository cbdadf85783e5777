"""
One ancestor or two
===================

A one-ancestor Galton-Watson tree conditioned to have at least two vertices
can be read as a two-ancestor code by letting the first child play the second
ancestor. For geometric offspring the two laws agree exactly; for Poisson
offspring they do not, and the gap does not close until the mean is tiny.
"""

from coagraph.degree_model import geometric_offspring, truncated_poisson
from coagraph.gw_law import exact_code_law, gw2_mass, single_ancestor_mass, single_ancestor_law_check


def restricted_tv(nu, max_size=6):
    codes = exact_code_law(nu, max_size)
    return 0.5 * sum(abs(float(single_ancestor_mass(c, nu) - gw2_mass(c, nu))) for c in codes)


for q in (0.2, 0.4):
    print(f"geometric q={q}: TV on codes of size <= 6 = {restricted_tv(geometric_offspring(q)):.2e}")
for p in (0.5, 0.1, 0.01):
    print(f"Poisson p={p}: TV on codes of size <= 6 = {restricted_tv(truncated_poisson(p)):.4f}")

# the sampler agrees with the conditioned law, not with GW2
rep = single_ancestor_law_check(truncated_poisson(0.5), 50_000, seed=2)
print(f"sampled TV to GW2 = {rep.tv:.4f}, null band {rep.band:.4f}")
