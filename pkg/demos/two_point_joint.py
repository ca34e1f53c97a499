# %% [markdown]
# # A joint that is not a product
#
# `V` takes `0` or `pi/2`, `W` takes `2pi/3` or `pi`, with joint weights
# `[[0.1, 0.2], [0.2, 0.5]]`.  The two cross covariances of `(sin, cos)`
# have opposite signs; their half sum `C^pi` decides whether the product of
# the marginals gives a larger integral than the joint itself.

# %%
import math

from weakcomo.showcase import example51, two_point_joint

joint = two_point_joint()
print("weights:\n", joint.weights)
print("marginals:", joint.pi1, joint.pi2)

ex = example51()
print("Cov[sin V, cos W] =", ex["cov_g_V_h_W"], " exact -1/200")
print("Cov[cos V, sin W] =", ex["cov_h_V_g_W"], " exact sqrt(3)/200 =", math.sqrt(3) / 200)
print("C^pi =", ex["c_pi"], " exact (sqrt(3) - 1)/400 =", (math.sqrt(3) - 1) / 400)

# %% [markdown]
# The product integral exceeds the joint integral by exactly `2 C^pi`.

# %%
print("product - joint =", ex["product_integral"] - ex["joint_integral"], " 2 C^pi =", 2 * ex["c_pi"])
print("conditional expectation of cos W given V:", ex["h_star"])
