"""Power-bias transforms, Stein identities and Monte Carlo checks of the
Gaussian, exponential and gamma fixed-point characterizations."""

from powerbias.dist import (
    Beta,
    Biased,
    DistSpec,
    Empirical,
    Exponential,
    Gamma,
    Maxwell,
    Normal,
    PointMass,
    PowerOf,
    Rademacher,
    Scaled,
    Shifted,
    UniformInterval,
    UniformProduct,
    cdf,
    expect,
    laplace,
    moment,
    pdf,
    sample,
)
from powerbias.rng import parallel_sample, stream
from powerbias.suites import run_suite
from powerbias.transforms import equilibrium_rep, power_bias, power_of, scale, zero_bias_rep

__version__ = "0.1.0"
