# %% [markdown]
# # Brackets and verdicts
#
# Each fixture system is written as `z' = f0(z) + u1 f1(z) + u2 f2(z)` with
# polynomial fields that vanish appropriately at the origin. Brackets are
# computed exactly over the rationals with `[f, g] = (Dg) f - (Df) g`.

# %%
from stlccheck import fixtures
from stlccheck.conditions import AnalysisConfig, analyze, theorem1_classify
from stlccheck.liealg import B1, NEUTRALIZER, BracketEvaluator, bracket_span_at_origin

s = fixtures.load("example0")
ev = BracketEvaluator(s)
print("B1(0) =", ev.value(B1))
print("[f1,[f2,f1]](0) =", ev.value(NEUTRALIZER))

# %% [markdown]
# `R1(0)` collects brackets containing `f1` exactly once. Here it saturates
# at `span{e2}` well before length 6.

# %%
R1 = bracket_span_at_origin(s, s.alphabet, {1: 1}, 6)
print(R1, "saturated:", R1.saturated)

# %% [markdown]
# The two-input classifier: `B1(0)` is outside `R1(0)` and the neutralizing
# bracket lies in `R1(0) + span B1(0)`, so the quadratic drift cannot be
# compensated.

# %%
print(theorem1_classify(s).label)

# %% [markdown]
# For the family with parameter `alpha` the neutralizer is a nonzero multiple
# of `B1(0)`. The classifier then finds the scalar `beta` and shifts the drift
# by `beta f2`.

# %%
for a in (1, 2, 5):
    v = theorem1_classify(fixtures.example1(a))
    print(a, v.case, v.beta)

# %% [markdown]
# A full report runs every applicable checker, including the shifted
# equilibria.

# %%
print(analyze(fixtures.load("example1_alpha2"), AnalysisConfig(even_bracket_heuristic=True)).to_text())
