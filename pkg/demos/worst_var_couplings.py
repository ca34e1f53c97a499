# %% [markdown]
# # Worst-case VaR of a sum and the couplings that attain it
#
# For two marginals with `m` equally likely distinct values and a level
# `p = k/m`, the worst VaR of `X + Y` has a closed form and is attained by
# pairing the bodies in the same order and the tails in reverse order.
# Enumerating all `m!` pairings shows which other couplings also attain it.

# %%
import numpy as np

from weakcomo import (
    brute_force_worst_var,
    build_worst_coupling,
    family_tail_P,
    family_tail_Q,
    maximizing_couplings,
    var,
    wc_family,
    worst_es_two,
    worst_var_two,
)

fx = np.array([1.0, 2.0, 3.0, 4.0])
fy = fx.copy()
p = 0.5
c = build_worst_coupling(fx, fy, p)
print("closed form:", worst_var_two(fx, fy, p), " brute force:", brute_force_worst_var(fx, fy, p).max_value)
print("constructed pairing:", c.pairs(), " VaR of the sum:", var(c.total, p))
print("worst ES:", worst_es_two(fx, fy, p))

# %% [markdown]
# The constructed coupling is comonotone across the tail boundary and
# antimonotone inside the tail.  That structure is sufficient.  Is it also
# necessary?  Count the maximizers that lack it.

# %%
rng = np.random.default_rng(0)
total = lacking = 0
example = None
for _ in range(200):
    m = int(rng.integers(4, 7))
    x = rng.choice(np.arange(30), m, replace=False) + 0.0
    y = rng.choice(np.arange(30), m, replace=False) + 0.0
    q = int(rng.integers(1, m)) / m
    for cp in maximizing_couplings(x, y, q):
        total += 1
        across = wc_family(cp.X, cp.Y, family_tail_P(cp.X, q)).all_comonotonic
        inside = wc_family(cp.X, cp.Y, family_tail_Q(cp.X, q)).all_antimonotonic
        if not (across and inside):
            lacking += 1
            example = example or (cp.pairs(), q, across, inside)
print(f"{lacking} of {total} maximizing couplings lack the structure")
print("first one (pairs, p, comonotone across, antimonotone inside):", example)
