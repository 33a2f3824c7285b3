# %% [markdown]
# # Sample events and Cramer's condition
#
# The bootstrap expansion is only controlled on samples that behave: small
# coefficients, bounded moments, a well-conditioned covariance, and an
# empirical characteristic function close to the population one.  This
# script checks each event for a smooth population and a lattice one.

# %%
from bootedge.bootstrap import SampleSet
from bootedge.catalog import population
from bootedge.diagnostics import (
    EventConfig, complement_probability, cramer_probe, e1_indicator, e2_indicator, e3_e4_indicator,
    e5_integral, e5_threshold,
)
from bootedge.mc import MCConfig

cfg = EventConfig()
print(f"moment exponent r={cfg.r}, cf power m={cfg.m}")

for name in ("normal", "lattice"):
    pop = population(name)
    s = SampleSet.simulate(pop, [200], seed=3)
    e3, e4 = e3_e4_indicator(s, cfg)
    est, e5 = e5_integral(s, pop.cf, cfg, MCConfig(samples=20_000, seed=4))
    probe = cramer_probe(pop.cf)
    print(f"\n{name}:")
    print(f"  E1={e1_indicator(s, cfg, pop.mean)}  E2={e2_indicator(s, cfg, cfg.c2_for(pop))}  E3={e3}  E4={e4}")
    print(f"  E5 integral {est.value:.2e} vs threshold {e5_threshold(200, cfg):.2e} -> {e5}")
    print(f"  sup |cf| far from the origin: {probe.sup_modulus:.3f} (Cramer {'ok' if probe.satisfied else 'violated'})")

# %% [markdown]
# Both samples pass E5.  The integrand rescales t by n^{u-1/2}, so at
# moderate n it never reaches the frequencies where the lattice
# characteristic function returns to modulus one.  Only the direct probe of
# |cf| over large t separates the two populations.

# %% [markdown]
# How often does each event fail as n grows?  The E1 failure rate falls
# steadily; the covariance event never fails for normal data at these sizes.

# %%
pop = population("normal")
for n in (25, 50, 100, 200):
    est = complement_probability(["E1", "E2", "E3"], pop, n, 400, seed=5, cfg=cfg)
    print(n, {k: round(v.value, 3) for k, v in est.items()})
