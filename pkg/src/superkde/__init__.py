"""superkde: kernel density estimation with superkernels.

Exact Fourier-domain risk (MISE/ISE), kernel classification through
characteristic functions, three data-driven bandwidth selectors, and a
reproducible Monte Carlo harness.
"""

from .densities import (
    DensitySpec,
    Sample,
    density_cdf,
    density_cf,
    density_eval,
    density_names,
    deriv_roughness,
    get_density,
    sample,
    supersmooth_integral,
)
from .errors import (
    ConfigError,
    DegenerateSample,
    Divergent,
    EmptyGrid,
    InvalidBandwidth,
    InvalidBracket,
    NoFlatRegion,
    NonConvergence,
    NoRoot,
    NotApplicable,
    NotIntegrable,
    SuperkdeError,
)
from .estimation import Estimate, EvalGrid, ecf, ecf_abs2, kde_eval, kde_eval_grid
from .kernels import (
    KernelClassification,
    KernelSpec,
    check_admissible,
    classify,
    compute_s_t,
    get_kernel,
    kernel_cf,
    kernel_eval,
    kernel_moment,
    kernel_names,
    kernel_roughness,
    kernel_scaled_eval,
)
from .numerics import (
    DEFAULT_QUADRATURE,
    PRNG_ALGORITHM,
    QuadratureSettings,
    RngStream,
    integrate,
    minimize_scalar,
)
from .risk import (
    OptimalBandwidthResult,
    RiskReport,
    conv_with_density,
    ise_exact,
    ise_exact_quadrature,
    minimal_mise,
    mise_exact,
    optimal_bandwidth,
    parametric_bound,
    smooth_rate_bound,
    supersmooth_rate_check,
    variance_identity_check,
    zero_bias_bandwidth,
)
from .selectors import (
    PolitisSettings,
    SelectorResult,
    default_lscv_grid,
    lscv_objective,
    lscv_select,
    politis_select,
    sj_select,
)
from .simcli import ExperimentConfig, ResultRow, parse_config, run_experiment, write_csv

__version__ = "0.1.0"
