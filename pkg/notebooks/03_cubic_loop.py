# %% [markdown]
# # A loop in a three-dimensional system
#
# System: `x' = u1`, `y' = x`, `z' = x^3 + y^2 + u2 x^2` (the `psi = x^2`
# member of the quartic family). The oscillating controls
# `u1 = eps^2 (sin(t/eps)/4 - sin(2t/eps)/2)` and
# `u2 = eps^2 (5 cos(t/eps)/16 - 3 cos(2t/eps)/4)` bring `x` and `y` back to
# zero at `T = 2 pi eps`.

# %%
import math

from stlccheck.numsim import det_closed_form, endpoint_xyz, reproduce_example23

eps = 0.1
print(endpoint_xyz(eps))
print("exact z(T):", 3 * math.pi * eps ** 9 * (2 * eps + 3) / 256)

# %% [markdown]
# The `z` component does not return to zero: it equals
# `3 pi eps^9 (2 eps + 3) / 256`, which is below `1e-6 eps^3` but above
# `1e-10`.
#
# Perturbing `u1` by `a + b t + c t^3` gives an endpoint map whose Jacobian
# determinant is computed below by central differences on the RK4 flow and
# on the quadrature route.

# %%
r = reproduce_example23(eps, steps=20_000)
print("det (RK4)        ", r.det_numeric)
print("det (quadrature) ", r.det_xyz)
print("reference formula", det_closed_form(eps))

# %% [markdown]
# Both numerical routes agree with the exact determinant
# `pi^5 eps^14 (-609105 eps + 39600 pi^2 eps - 759430 + 45312 pi^2) / 207360`.
# The reference formula is larger by a factor of about 20. Both values are
# nonzero, so the endpoint map is a local diffeomorphism either way.

# %%
p2 = math.pi ** 2
print(math.pi ** 5 * eps ** 14 * (-609105 * eps + 39600 * p2 * eps - 759430 + 45312 * p2) / 207360)
