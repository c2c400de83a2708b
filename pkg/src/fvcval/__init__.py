"""Forensic voice comparison validation toolkit.

Scores questioned/known speaker-embedding pairs under four normalization
variants, calibrates scores to likelihood ratios with leave-out kernel
density estimation, and computes the standard validation metric suite
(Cllr family, 95% CI, ROCCH EER, ECE) with Tippett, DET, ECE, and
accuracy-precision plots.
"""

from .calibration import (
    KdeModel,
    LRSet,
    TrialLR,
    isotonic_posteriors,
    kde_density,
    kde_from_points,
    loo_calibrate,
    pav_llr,
    select_bandwidth,
)
from .dataset import (
    EmbeddingSet,
    Manifest,
    RecordingMeta,
    Trial,
    enumerate_trials,
    load_dataset,
    load_embeddings,
    parse_manifest,
    synthesize_dataset,
    write_embeddings,
    write_manifest,
)
from .errors import (
    DataValidationError,
    DegenerateCohortError,
    DegenerateSampleError,
    InsufficientSupportError,
    NumericError,
    UndefinedPrecisionError,
)
from .metrics import (
    EcePoint,
    LrGroup,
    MetricsReport,
    ci95,
    cllr,
    cllr_mean,
    cllr_min,
    default_prior_grid,
    ece_curve,
    eer_rocch,
    group_lrs,
    rocch_eer,
    rocch_points,
    summarize,
)
from .plots import CurveSeries, accuracy_precision_render, det_data, ece_render, tippett_data
from .scoring import (
    CohortStats,
    ScoredTrial,
    ScoreNormStats,
    TrialScoreSet,
    adaptive_cohort,
    cohort_stats,
    cosine_score,
    score_trials,
    snorm_score,
    znorm_embedding,
)

__version__ = "0.1.0"
