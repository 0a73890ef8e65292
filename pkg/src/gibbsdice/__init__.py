"""Face probabilities of cuboidal and irregular dice from a one-parameter
Gibbs distribution: prediction, maximum-likelihood fitting and goodness of fit.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .datasets import BUILTIN, ExperimentRecord, load_builtin, load_experiment, parse_experiment, serialize_experiment
from .errors import (
    DatasetError,
    DegenerateCellError,
    GibbsDiceError,
    InvalidGeometryError,
    InvalidParameterError,
)
from .estimation import (
    FitResult,
    TossCounts,
    XxyObservation,
    fit_beta,
    fit_beta_global,
    global_neg_log_likelihood,
    neg_log_likelihood,
)
from .model import (
    CuboidSpec,
    GeneralDieSpec,
    Normalization,
    cuboid_energies,
    general_energies,
    gibbs_probabilities,
    simpson_probabilities,
    xxy_pxx,
)
from .validation import (
    BootstrapConfig,
    BootstrapResult,
    GofResult,
    bootstrap_constant_beta,
    chi_square_full,
    chi_square_xxy,
    simulate_tosses,
)
