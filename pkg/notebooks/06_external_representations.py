# %% [markdown]
# # Scoring representations produced elsewhere
#
# Any model can be scored from two CSV files: integer factors
# (``factor_0, factor_1, ...``) and float codes (``code_0, code_1, ...``) with
# matching rows.  Interventional scores need an oracle encoder and are
# reported as failures for external data.

# %%
import tempfile
from pathlib import Path

import numpy as np

from disentbench.factors import CodeBatch, FactorBatch, FactorSpace
from disentbench.io import ingest_external, write_codes_csv, write_factors_csv
from disentbench.metrics import EvalBudget, evaluate_batches

rng = np.random.default_rng(0)
space = FactorSpace.from_cardinalities([3, 5])
z = np.c_[rng.integers(0, 3, 3000), rng.integers(0, 5, 3000)]
codes = np.c_[(z[:, 0] + 0.5) / 3 + 0.05 * rng.standard_normal(3000),
              z[:, 1] - 0.3 * z[:, 0], rng.standard_normal(3000)]

tmp = Path(tempfile.mkdtemp())
write_factors_csv(FactorBatch(z, space), tmp / "factors.csv")
write_codes_csv(CodeBatch(codes), tmp / "codes.csv")

# %%
factors, batch = ingest_external(tmp / "factors.csv", tmp / "codes.csv")
res = evaluate_batches(factors, batch, ["mig", "dci_d", "dci_c", "sap", "beta_vae"],
                       EvalBudget(n_train=2000, n_test=1000))
for r in res:
    print(f"{r.metric:9s}", f"{r.value:.3f}" if r.ok else r.error)

# %% [markdown]
# The same pair can be declared in a run configuration under ``external`` and
# scored with ``disentbench evaluate``.
