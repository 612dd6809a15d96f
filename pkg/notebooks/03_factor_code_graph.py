# %% [markdown]
# # Which factors get confused with which
#
# Treat a factor-code matrix as a weighted bipartite graph.  Deleting every
# edge lighter than a threshold t and counting connected components gives a
# curve; the largest t at which two factors share a component is their merge
# threshold, and the merges form a dendrogram.

# %%
import numpy as np

from disentbench import EvalBudget, OracleEncoder, compute_matrices
from disentbench.analysis import confusion_thresholds, dendrogram, independent_groups_curve
from disentbench.factors import FactorSpace
from disentbench.report import dendrogram_svg

m = np.array([[0.9, 0.1], [0.2, 0.8]])
print(independent_groups_curve(m, [0.5, 0.15]))
dg = dendrogram(m)
print("merges:", dg.merges)

# %% [markdown]
# On a real estimate: merge factors 0 and 1 into one code and look at the MI graph.

# %%
space = FactorSpace.from_cardinalities([4, 4, 3, 5])
enc = OracleEncoder("merge", groups=((0, 1),))
dgs = []
for seed in range(3):
    mi = compute_matrices(space, enc, EvalBudget(n_train=2000, n_test=1000),
                          np.random.default_rng(seed), ("MI",))["MI"]
    dgs.append(dendrogram(mi))
print("mean merge thresholds (higher = more confused):")
print(np.round(confusion_thresholds(dgs), 3))

# %%
svg = dendrogram_svg(dgs[0].merges, list(space.names), "merge encoder")
print(svg[:200], "...")
