# %% [markdown]
# # Exponential reweighting of the uniform law
#
# Reweighting the uniform law on `[0, pi]` by `exp(theta x)` tilts mass to
# the right for `theta > 0` and to the left for `theta < 0`.  The integral
# for `(sin, cos)` follows the tilt: positive when the mass sits where both
# fall, negative when it sits where they move apart.

# %%
import math

import numpy as np

from weakcomo import FunctionHandle, LineMeasure, independent_product, weighted_measure, wc_fun
from weakcomo.showcase import COS, SIN

uniform = LineMeasure.uniform(0.0, math.pi)
for theta in (-2.0, -1.0, 0.0, 1.0, 2.0):
    tilt = FunctionHandle(f"exp({theta} x)", lambda x, t=theta: np.exp(t * x))
    w = weighted_measure(uniform, tilt)
    print(f"theta={theta:+.1f}: integral {wc_fun(SIN, COS, independent_product(w, w)).value:+.6f}")
