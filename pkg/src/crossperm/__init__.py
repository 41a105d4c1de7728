"""Fast permutation and bootstrap p-values from square-root cross combinations."""

from .engines import (
    NullStats,
    ResamplePlan,
    boot_ttest2_efficient,
    boot_ttest2_naive,
    boot_ttest2_neto,
    corr_test,
    james_boot_efficient,
    james_boot_ordinary,
    james_test,
    permcor_efficient,
    permcor_naive,
    pvalue_from_null,
    ttest2,
)
from .errors import *  # noqa: F401,F403
from .sampling import RngState, fork
from .statistics import (
    GroupSummary,
    MultivariateSample,
    PairedSample,
    TestResult,
    corr_asymptotic_pvalue,
    fisher_z,
    james_stat,
    pearson_r,
    summarize,
    welch_asymptotic_pvalue,
    welch_df,
    welch_t,
)

__version__ = "0.1.0"
