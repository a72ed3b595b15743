# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Distances between samples
#
# Mallows (Wasserstein-1), Kolmogorov-Smirnov, and an upper bound on the
# bounded Lipschitz distance built from the two.

# %%
from logcave import distance_report
from logcave.distances import bounded_lipschitz_lower
from logcave.empirical import from_samples
from logcave.simulate import sampler_gaussian_mixture

for n in (50, 500, 5000):
    a = from_samples(sampler_gaussian_mixture(1, n))
    b = from_samples(sampler_gaussian_mixture(2, n))
    rep = distance_report(a, b)
    lower = bounded_lipschitz_lower(a, b, 50, 0)
    print(n, rep, f"BL lower {lower:.4f}")

# %% [markdown]
# The bound is loose for small samples (it can exceed 2, the trivial bound
# on D_BL, which the report flags), but it shrinks with D_KS.
