# %% [markdown]
# # Chen-Fliess series
#
# For polynomial fields the series truncated at length `L` has exact
# rational coefficients `(f_I phi)(0)`; only the iterated integrals are
# floating point.

# %%
import numpy as np

from stlccheck import fixtures
from stlccheck.chenfliess import series_terms, series_truncated, w_r_compare
from stlccheck.numsim import integrate_rk4
from stlccheck.polycore import MultiPoly
from stlccheck.sysio import ControlSignal

s = fixtures.load("example0")
x = MultiPoly.variable(2, 0)
for I, c in series_terms(s, x, 3):
    print(I, c)

# %% [markdown]
# Against RK4 with constant controls `1/2` the truncation error at `L = 6`
# should shrink like `T^7`.

# %%
half = ControlSignal.constant(0.5)
Ts = [0.2, 0.1, 0.05]
errs = []
for T in Ts:
    ref = integrate_rk4(s, (half, half), [0, 0], T, 20_000).endpoint[0]
    errs.append(abs(series_truncated(s, x, (half, half), T, 6) - ref))
print(errs)
print("order", np.polyfit(np.log2(Ts), np.log2(errs), 1)[0])

# %% [markdown]
# ## Coordinates of the second kind
#
# `w_r(s)` is a double integral of `u1` against `(tau - sigma)^r`. Rewritten
# in terms of `v1 = int u1` it becomes a combination of single integrals.
# Both forms agree for any control.

# %%
u1 = ControlSignal.piecewise_constant([0, 0.3, 0.7, 1.0], [1.0, -2.0, 0.5])
for r in range(4):
    print(r, w_r_compare(u1, r, 0.9))
