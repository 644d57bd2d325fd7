# Statistical verification modules
from .reports import (
    HolderEstimate,
    HolderSummary,
    KcCheckReport,
    RescalingReport,
    ContrastReport,
    DiscontinuityReport,
    StationaryReport
)
from .holder import estimate_holder, holder_profile, holder_check
from .moment_check import kc_moment_check
from .rescaling import rescaling_test, limit_marginal_cdf
from .contrast import fig2_contrast, discontinuity_check, stationary_covariance_check
