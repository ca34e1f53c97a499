# %% [markdown]
# # sin and cos on three windows of [0, pi]
#
# `sin` rises then falls on `[0, pi]` while `cos` only falls, so the sign of
# the weak comonotonicity integral depends on where the uniform measure sits.
# On `[0, a]` both move in opposite directions, on `[pi - a, pi]` both fall,
# and the centered window balances out.

# %%
import math

import numpy as np

from weakcomo.showcase import WINDOWS, delta_closed_form, delta_quadrature, delta_table

for a in (math.pi / 4, math.pi / 2, math.pi):
    row = {w: delta_quadrature(a, w) for w in WINDOWS}
    print(f"a = {a:.4f}: " + ", ".join(f"{w} {v:+.6f}" for w, v in row.items()))

# %% [markdown]
# The closed form on the right window is `2 sin a (1 - cos a) / a^2 - sin^2 a / a`.
# At `a = pi/2` it equals `8/pi^2 - 2/pi`.

# %%
print(delta_closed_form(math.pi / 2, "right"), 8 / math.pi**2 - 2 / math.pi)

# %%
tab = delta_table(200)
print("max |closed form - quadrature| over 200 points:", f"{tab['max_abs_discrepancy']:.2e}")
print("right window minimum:", float(np.min(tab["right_quad"])))
print("left window maximum:", float(np.max(tab["left_quad"])))
print("center window max |value|:", float(np.max(np.abs(tab["center_quad"]))))
