"""Closed-form large-deviation quantities for the linear model.

When the intensity is affine in the excitation, the cumulant generating
function of the long-run event count has an explicit form: it is driven
by the minimal root of a scalar fixed-point equation, exists only below
a critical tilt, and its Legendre transform (the rate function) is also
available in closed form.  These expressions are the ground truth that
every numerical route in this package is checked against.
"""

import numpy as np

from hawkes_ldp import (
    LinearModel,
    gamma_linear,
    minimal_fixed_point,
    rate_linear,
    theta_critical,
    theta_x,
)

model = LinearModel(nu=1.0, mu=0.5)  # baseline rate and kernel mass

# ----------------------------------------------------------------------
# The critical tilt: beyond it the generating function is infinite.

tc = theta_critical(model.mu)
print(f"critical tilt for mass {model.mu}: {tc:.12f}  (= mu - 1 - log mu)")

# ----------------------------------------------------------------------
# The scaled cumulant generating function, point by point.

for theta in (-1.0, -0.25, 0.0, 0.1, tc, tc + 0.01):
    g = gamma_linear(theta, model)
    x = minimal_fixed_point(theta, model.mu) if np.isfinite(g) else np.nan
    print(f"  theta = {theta:+.4f}:  gamma = {g:<22.17g} root x = {x:.10g}")

# At the critical tilt the minimal root is 1/mu and gamma stays finite;
# one step beyond, the fixed-point equation loses its solution.

# ----------------------------------------------------------------------
# The rate function and its tilt parametrisation.
#
# rate_linear(x) vanishes at the stationary mean count nu/(1 - mu) and
# grows on both sides; theta_x returns the tilt whose generating
# function has slope x, which is the Legendre maximiser.

mean = model.nu / (1.0 - model.mu)
print(f"\nstationary mean count rate: {mean}")
for x in (0.5, 1.0, mean, 4.0):
    ix = rate_linear(x, model)
    tx = theta_x(x, model)
    # Legendre identity: I(x) = theta_x * x - gamma(theta_x)
    legendre = tx * x - gamma_linear(tx, model)
    print(
        f"  x = {x:>4}:  I(x) = {ix:.10f}   theta_x = {tx:+.6f}   "
        f"theta_x*x - gamma = {legendre:.10f}"
    )
