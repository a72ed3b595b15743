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
# # A bimodal target
#
# Take Q = 0.7 N(-1.5, 1) + 0.3 N(1.5, 1). Its log-density is concave in the
# tails and convex around the antimode. The projection keeps the tails and
# bridges the dip with a straight line.

# %%
import numpy as np

from logcave import fit
from logcave.simulate import mixture_antimode, mixture_grid, mixture_logpdf

q = mixture_grid(10_000)
psi = fit(q)
knots = psi.knot_set()
am = mixture_antimode()
i = np.searchsorted(knots, am)
print(f"antimode {am:.4f}; linear piece [{knots[i - 1]:.4f}, {knots[i]:.4f}]")

# %%
for x in (-3, -2, -1, 0, 1, 2, 3):
    print(f"x={x:+d}  psi={psi.eval_log(float(x)):+.4f}  log g={float(mixture_logpdf(x)):+.4f}")

# %% [markdown]
# The mean is preserved exactly and the variance shrinks, as it must for a
# projection that is dominated by Q in convex order.

# %%
print("means:", psi.mean(), q.mean())
print("variances:", psi.variance(), q.variance())

# %% [markdown]
# ## Sampling noise
# Projections of finite samples approach the projection of the population.

# %%
from logcave import l1_distance
from logcave.empirical import from_samples
from logcave.simulate import sampler_gaussian_mixture

ref = fit(mixture_grid(100_000))
x = sampler_gaussian_mixture(0, 3200)
for n in (50, 200, 800, 3200):
    print(n, round(l1_distance(fit(from_samples(x[:n])), ref), 4))
