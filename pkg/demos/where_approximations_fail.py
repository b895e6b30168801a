"""
Where the moment expansions break down
======================================

The quartic Taylor estimate assumes a small spread of distances around
their mean. Heavy tails and large fourth cumulants violate that. The
order-6 summary carries a residual diagnostic that flags it. A distance
built from means and variances alone (the quadratic form) cannot see
differences that only show up in the tails.
"""
from energyhet import energy_from_summaries, energy_statistic, summarize
from energyhet.approx import residual_r3
from energyhet.empirical import quadratic_distance
from energyhet.synth import gamma, normal, sample, standardized_t

ref = sample(normal(0, 1), 3000, seed=0)
for spec in (normal(0.5, 1), gamma(1, 2), standardized_t(5)):
    y = sample(spec, 3000, seed=1)
    est = energy_from_summaries(summarize(ref, order=6), summarize(y, order=6))
    exact = energy_statistic(ref, y).coefficient
    print(f"{str(spec):22s} exact H={exact:.4f}  taylor H={est.coefficient:.4f}  "
          f"R3(y)={est.diagnostics['residual_r3_y'][0]:.3f}")

# R3 for a Gaussian is a fixed fraction of sigma.
print("\nR3 for N(0, s^2):", [round(residual_r3(s * s, 0, 0, 0), 4) for s in (0.5, 1, 2)])

# Same mean and variance: the quadratic form is zero up to noise, the energy
# coefficient is small but not zero.
t = sample(standardized_t(5), 3000, seed=2)
print("\nN(0,1) vs standardized t(5): quadratic form %.4f, energy H %.4f"
      % (quadratic_distance(ref, t), energy_statistic(ref, t).coefficient))
