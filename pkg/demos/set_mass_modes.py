# %% [markdown]
# # Pairs versus diagonal set-mass families
#
# The pairs family uses every `P_A x P_B` over unions of level sets of `X`;
# the diagonal family keeps only `P_A x P_A`.  Pairs implies diagonal.  A
# randomized search looks for the converse failing on small spaces.

# %%
import numpy as np

from weakcomo import RandomVariable, family_set_masses, wc_family

rng = np.random.default_rng(1)
hits = []
trials = 20000
for _ in range(trials):
    m = int(rng.integers(3, 7))
    X = RandomVariable.equal_weight(rng.permutation(m) + 0.0, "X")
    Y = RandomVariable.equal_weight(rng.integers(-5, 6, size=m) + 0.0, "Y")
    diag = wc_family(X, Y, family_set_masses(X, "diagonal")).all_comonotonic
    pairs = wc_family(X, Y, family_set_masses(X, "pairs")).all_comonotonic
    if diag and not pairs:
        hits.append((X.values, Y.values))
print(f"{len(hits)} instances out of {trials} pass the diagonal family but fail the pairs family")

# %% [markdown]
# None turn up, and none can: when every union of level sets is in the
# family, the two-atom sets `{i, j}` are too, and their diagonal integral is
# `(x_i - x_j)(y_i - y_j) / 2`.  Non-negativity for all of them forces strong
# comonotonicity, which implies every pairs member is non-negative.
