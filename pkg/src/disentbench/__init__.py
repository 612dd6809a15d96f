"""Evaluation of representations against known ground-truth factors of variation."""
__version__ = "0.1.0"

from .errors import (ArgumentError, ConfigError, DataError, DegenerateError,  # noqa: E402
                     DegenerateLabelError, DisentError, DomainError)
from .factors import (CodeBatch, FactorBatch, FactorSpace, OracleEncoder,  # noqa: E402
                      dequantize, encode, encode_both, sample_factors, sample_factors_fixed)
from .impossibility import (Entangler, householder, jacobian, norm_cdf,  # noqa: E402
                            norm_ppf, verify_marginals)
from .estimation import (FactorCodeMatrix, average_pairwise_mi, gbt_matrix,  # noqa: E402
                         mi_matrix, svm_matrix, unsupervised_scores)
from .metrics import (ALL_METRICS, EvalBudget, MetricResult, aggregate,  # noqa: E402
                      aggregate_dci_c, aggregate_dci_d, aggregate_mig, aggregate_modularity,
                      aggregate_sap, beta_vae_score, blend_scores, compute_matrices,
                      dci_informativeness, evaluate, evaluate_batches, factor_vae_score,
                      irs_score)
from .analysis import (confusion_thresholds, dendrogram, downstream,  # noqa: E402
                       independent_groups_curve, rank_corr_table, reliability, score_table,
                       statistical_efficiency, transfer_protocol, variance_explained)
