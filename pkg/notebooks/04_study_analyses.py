# %% [markdown]
# # Study-level questions on a score table
#
# A score table has one row per (data set, encoder, seed, metric).  Here a
# small synthetic study sweeps the rotation strength of an oracle encoder and
# asks: do metrics agree, how much do method labels explain, and does picking
# the best setting on one metric or data set transfer to another?

# %%
import numpy as np

from disentbench import EvalBudget, OracleEncoder, evaluate
from disentbench.analysis import (rank_corr_table, score_table, transfer_protocol,
                                  variance_explained)
from disentbench.factors import FactorSpace

spaces = {"small": FactorSpace.from_cardinalities([3, 4, 4]),
          "large": FactorSpace.from_cardinalities([4, 5, 6])}
budget = EvalBudget(n_train=600, n_test=300)
metrics = ["irs", "mig", "sap", "modularity"]
records = []
for ds, space in spaces.items():
    for method, mixes in (("gentle", (0.0, 0.1, 0.2)), ("strong", (0.6, 0.8, 1.0))):
        for mix in mixes:
            enc = OracleEncoder.rotation(space, 0.25, mix=mix)
            for seed in range(3):
                for r in evaluate(space, enc, metrics, budget, np.random.default_rng([seed, 7])):
                    records.append({"encoder_id": f"{method}-{mix}", "dataset_id": ds,
                                    "method_label": method, "hyperparam_label": str(mix),
                                    "seed": seed, "metric_name": r.metric,
                                    "n_samples": budget.n_train, "value": r.value})
table = score_table(records)
print(table.head())

# %%
print(rank_corr_table(table).round(2))
print(rank_corr_table(table, "metric_vs_dataset", metric_name="mig").round(2))

# %%
print(variance_explained(table, "method").round(3))
print(variance_explained(table, "method_hyperparam").round(3))

# %%
print(transfer_protocol(table, trials=2000, rng=np.random.default_rng(0)))
