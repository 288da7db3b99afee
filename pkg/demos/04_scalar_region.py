"""A scalar loop that is stable for every sampling interval.

For x+ = a x + b u with u = x(t_k) the interval maps stay contractive for
any interval length when a, b and a+b lie in the right ranges.  The
passivity multiplier lets the LMI see this; the pure gain multiplier cannot.
"""
from aperiodic_msi import SystemModel, certify_model, falsify, linear_search, scalar_region

m = SystemModel.scalar(0.4, 0.5)
print("inside the arbitrary-interval region:", scalar_region(0.4, 0.5))
for h in (10, 100, 1000):
    cert = certify_model(m, h)
    print(f"hbar = {h:>5}: {cert.verdict:>14}  margin {cert.diagnostics['margin']:.2e}")

res = linear_search(lambda h: certify_model(m, h, pin_y_zero=True).certified, cap=1000)
print(f"without the passivity multiplier the certificate stops at hbar = {res.hbar_msi}")

fal = falsify(m, 10_000, trials=20, horizon=20_000, seed=0)
print(f"falsification with hbar = 10000: worst growth {fal.growth:.3e}")

neg = SystemModel.scalar(0.5, -0.1)
res = linear_search(lambda h: certify_model(neg, h).certified, cap=1000)
print(f"\nb < 0 (a = 0.5, b = -0.1): region {scalar_region(0.5, -0.1)}, "
      f"certified up to hbar = {res.hbar_msi}")
