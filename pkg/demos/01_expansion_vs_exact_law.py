# %% [markdown]
# # One-term expansion against an exact law
#
# The standardized mean of n Exp(1) draws has an exact law: the sum is
# Gamma(n, 1).  This script puts the normal approximation and the one-term
# expansion next to it and shows how the worst-case error shrinks with n.

# %%
import math

import numpy as np
from scipy import special

from bootedge.diagnostics import fit_rates
from bootedge.edgeworth import build_expansion, expansion_probability
from bootedge.regions import Ball
from bootedge.tensors import CumulantSet

# Exp(1) after standardization: mean 0, variance 1, third cumulant 2
cumulants = CumulantSet.univariate([0.0, 1.0, 2.0])
normal = build_expansion(cumulants, np.eye(1), 0)
one_term = build_expansion(cumulants, np.eye(1), 1)
print("first correction polynomial:", one_term.terms[1])

# %% [markdown]
# Each probability below is for the half-line (-inf, t].

# %%
grid = np.linspace(-3, 3, 121)
ns = [10, 20, 40, 80, 160]
rows = []
for n in ns:
    exact = special.gammainc(n, n + grid * math.sqrt(n))
    p0 = np.array([expansion_probability(normal, Ball.halfline(t), n).value for t in grid])
    p1 = np.array([expansion_probability(one_term, Ball.halfline(t), n).value for t in grid])
    rows.append((n, np.max(np.abs(exact - p0)), np.max(np.abs(exact - p1))))

print(f"{'n':>5} {'normal':>10} {'one term':>10}")
for n, e0, e1 in rows:
    print(f"{n:>5} {e0:>10.2e} {e1:>10.2e}")

# %% [markdown]
# On a log-log scale the normal error falls like n^{-1/2} and the corrected
# error like n^{-1}.

# %%
for label, col in (("normal", 1), ("one term", 2)):
    fit = fit_rates(ns, [r[col] for r in rows])
    print(f"{label:>9}: slope {fit.slope:+.3f}")
