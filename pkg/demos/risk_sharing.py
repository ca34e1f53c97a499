# %% [markdown]
# # Quantile risk sharing with a tail constraint
#
# Agent `i` evaluates its share by the left quantile `Q_{alpha_i}`.  Every
# share must move with the total on its top-`beta` tail.  The minimal total
# is `Q_gamma(X)` with `gamma = min(beta, max alpha) + sum (alpha_i - beta)_+`.

# %%
import numpy as np

from weakcomo import RandomVariable, SharingProblem, left_q, randomized_admissible_search, solve, v_beta

X = RandomVariable.equal_weight(np.arange(1.0, 101.0), "X")
for beta in (0.0, 0.03, 0.05, 0.10, 1.0):
    prob = SharingProblem(X, (0.05, 0.10), beta)
    print(f"beta={beta:.2f}: gamma={prob.gamma:.2f}, value={v_beta(prob)}")

# %% [markdown]
# The explicit allocation and its certificates, then a randomized search
# over admissible allocations that never does better.

# %%
prob = SharingProblem(X, (0.05, 0.10), 0.03)
alloc = solve(prob)
print("objective:", alloc.objective, " covers X:", alloc.covers_total, " tail constraint:", alloc.up_beta)
print("search minimum over 10^4 trials:", randomized_admissible_search(prob, 10**4, seed=1))

# %% [markdown]
# With `beta = 0` the constraint is vacuous and the value is `Q` at the sum
# of the levels.  With `beta = 1` every share is comonotone with the total
# and the value is `Q` at the largest level.

# %%
print(v_beta(SharingProblem(X, (0.05, 0.10), 0.0)), left_q(X, 0.15))
print(v_beta(SharingProblem(X, (0.05, 0.10), 1.0)), left_q(X, 0.10))
