"""Long-run variance estimation for stationary and nonstationary series.

The centerpiece is a double-kernel estimator that smooths over lags and
over time, so the variance of scaled means and regression scores is
estimated consistently even when the underlying process drifts or breaks.
Classical kernel HAC estimators, fixed-b normalization, the matching test
statistics and a Monte Carlo harness round out the package.

The numerical core has a compiled extension with a pure NumPy fallback;
`backend_name()` reports which one is active.
"""

from ._backend import BACKEND as _BACKEND
from ._backend import HAS_EXTENSION
from .bandwidths import PlugInDiagnostics, auto_plan
from .baselines import (
    FixedBCriticalValues,
    UndefinedStatisticError,
    andrews_hac,
    kvb_fixed_b,
    load_fixed_b_critical_values,
    nw_hac,
)
from .dkhac import (
    BandwidthPlan,
    DegenerateWindowError,
    LrvEstimate,
    NonPsdWarning,
    dk_hac,
    dk_hac_auto,
    gamma_hat,
    local_autocov_hat,
)
from .hartests import (
    NonPositiveVarianceError,
    RegressionFit,
    SingularBreadError,
    SingularDesignError,
    SingularZXError,
    TestResult,
    dm_test,
    gmm_sandwich,
    gr_test,
    iv_sandwich,
    ols_fit,
    t_test,
)
from .kernels import kernel_constants, lag_kernel, time_kernel
from .montecarlo import ESTIMATORS, MODELS, DgpSpec, SimulationReport, generate, run_experiment
from .sls import SlsSpec, local_autocov, local_spectrum, simulate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "HAS_EXTENSION",
    "backend_name",
    # kernels
    "lag_kernel",
    "time_kernel",
    "kernel_constants",
    # simulated processes
    "SlsSpec",
    "simulate",
    "local_autocov",
    "local_spectrum",
    # double-kernel estimator
    "BandwidthPlan",
    "LrvEstimate",
    "DegenerateWindowError",
    "NonPsdWarning",
    "local_autocov_hat",
    "gamma_hat",
    "dk_hac",
    "dk_hac_auto",
    "auto_plan",
    "PlugInDiagnostics",
    # baselines
    "nw_hac",
    "andrews_hac",
    "kvb_fixed_b",
    "FixedBCriticalValues",
    "UndefinedStatisticError",
    "load_fixed_b_critical_values",
    # tests
    "RegressionFit",
    "TestResult",
    "ols_fit",
    "t_test",
    "dm_test",
    "gr_test",
    "gmm_sandwich",
    "iv_sandwich",
    "SingularDesignError",
    "NonPositiveVarianceError",
    "SingularBreadError",
    "SingularZXError",
    # experiments
    "MODELS",
    "ESTIMATORS",
    "DgpSpec",
    "SimulationReport",
    "generate",
    "run_experiment",
]


def backend_name() -> str:
    """Name of the active numerical backend: "extension" or "numpy"."""
    return _BACKEND
