"""
Homodyne BPSK channel: sampled outcomes vs the closed-form error rate
=====================================================================

One antipodal coherent-state symbol, measured by homodyne detection with
a local oscillator at phase psi, produces a Gaussian outcome whose mean
depends on the symbol and on the offset between the channel phase theta
and psi.  This script samples blocks of outcomes at several offsets and
checks the maximum-likelihood detector's empirical error rate against
the closed form Q(A/sigma * |cos(offset)|).
"""

import math

import numpy as np

from qisac import ChannelParams, ber_theory, e_step, q_function, sample_block

# A link with mean photon number 10, transmissivity 0.8 and thermal noise 3.
# amplitude() and noise_var() are derived quantities: A = sqrt(2*eta*E) and
# sigma^2 = Na + 1/2.
params = ChannelParams(E=10.0, eta=0.8, Na=3.0, theta=0.0)
a = params.amplitude()
s2 = params.noise_var()
print(f"amplitude A = {a:.4f}, noise variance sigma^2 = {s2:.4f}")
print(f"per-symbol SNR A/sigma = {a / math.sqrt(s2):.4f}")
print()

# Sample 200k symbols at a few phase offsets and detect them by picking the
# mixture component with the larger posterior probability (for two equal
# priors this is the maximum-likelihood rule).
n = 200_000
print(f"{'offset':>8} {'empirical':>10} {'closed form':>12} {'diff/se':>8}")
for k, off_deg in enumerate((0.0, 20.0, 40.0, 60.0, 80.0)):
    p = ChannelParams(E=10.0, eta=0.8, Na=3.0, theta=math.radians(off_deg))
    block = sample_block(p, 0.0, n, seed=100 + k)

    # posterior responsibilities under the true parameters, then a hard call
    gamma = e_step(block, p, 0.0, p.theta)
    s_hat = gamma.argmax(axis=1)
    p_emp = float(np.mean(s_hat != block.s_true))

    p_th = ber_theory(p, 0.0)
    se = math.sqrt(p_th * (1 - p_th) / n)
    print(f"{off_deg:7.0f}d {p_emp:10.5f} {p_th:12.5f} "
          f"{abs(p_emp - p_th) / se:8.2f}")

print()
# The closed form is just the Gaussian tail beyond half the distance between
# the two symbol means: at zero offset that distance is 2A.
print("zero-offset error rate as a plain Gaussian tail:",
      f"{q_function(a / math.sqrt(s2)):.6f}")

# At a quarter-turn offset the two means coincide and detection is blind:
# the error rate saturates at one half.
p90 = ChannelParams(E=10.0, eta=0.8, Na=3.0, theta=math.pi / 2)
print(f"quarter-turn offset: closed form = {ber_theory(p90, 0.0):.3f}")
