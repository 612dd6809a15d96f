# %% [markdown]
# # How stable are scores, and do they predict downstream accuracy?
#
# Twenty encoders interpolate between the identity code and a fully rotated
# one.  Two independently seeded evaluations rank them; the Spearman
# correlation between the rankings measures reliability.  Tiny budgets make
# some scores noticeably less reliable.

# %%
import numpy as np

from disentbench import OracleEncoder
from disentbench.analysis import downstream, reliability, statistical_efficiency
from disentbench.factors import FactorSpace

space = FactorSpace.from_cardinalities([3, 4, 4, 5, 6])
encoders = [OracleEncoder.rotation(space, 0.25, mix=m) for m in np.linspace(0, 1, 20)]
for n in (100, 1000):
    rho = reliability(space, encoders, ["irs", "mig", "sap"], n, np.random.default_rng(n))
    print(n, {k: round(v, 3) for k, v in rho.items()})

# %% [markdown]
# Downstream: mean accuracy of per-factor classifiers trained on the codes.
# Statistical efficiency is the ratio of accuracy at 100 and 10000 samples.

# %%
small = FactorSpace.from_cardinalities([4, 4])
for name, enc in (("identity", OracleEncoder.identity()),
                  ("noise", OracleEncoder("noise_channels", noise_std=(1.0, 1.0),
                                          passthrough=False))):
    res = downstream(small, enc, (100, 10000), learner="gbt", rng=np.random.default_rng(0),
                     n_test=2000)
    print(name, res.accuracy, "efficiency", round(statistical_efficiency(res), 3))
