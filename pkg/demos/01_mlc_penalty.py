"""The bounded log penalty and its shrinkage rule.

The penalty grows like a log near zero and goes flat past a breakpoint, so
large entries (outliers) are not shrunk at all. The prox below shows the
three regimes: zeroed, shrunk, passed through.
"""

import numpy as np

from robustdoa import MlcParams, log_prox, mlc_prox, mlc_value, variational_weight

params = MlcParams(lam=1.0, gamma=2.0, eta=0.5)
print(f"breakpoint |x| = {params.breakpoint:.4f}, ceiling = {params.ceiling}")

r = np.array([0.0, 0.1, 0.5, 1.0, 2.0, params.breakpoint, 10.0, 100.0])
print("\n   |x|     penalty   weight")
for x, v, w in zip(r, mlc_value(params, r), variational_weight(params, r)):
    print(f"{x:7.3f}  {v:8.4f}  {w:7.4f}")

# log shrinkage alone: a dead zone, then a shrink that fades as |c| grows
mu, eta = 0.25, 0.5
print(f"\nlog prox, mu={mu}, eta={eta}")
for c in (0.2, 0.5, 0.6, 1.0, 2.0, 5.0):
    print(f"  c={c:4.1f} -> {log_prox(mu, eta, c).real:.4f}")

# reweighted step: the weight comes from the previous iterate, so an entry
# that was already large is left alone
c = np.array([0.3, 2.0, 8.0])
print("\nreweighted prox, previous iterate = c:", np.round(mlc_prox(params, 0.5, c, c).real, 4))
print("reweighted prox, previous iterate = 0:", np.round(mlc_prox(params, 0.5, c, 0 * c).real, 4))
