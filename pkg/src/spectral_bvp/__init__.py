"""Direct and inverse spectral problems for one-dimensional Schrodinger
equations in quasi-derivative form, with rational Herglotz-Nevanlinna
boundary coefficients that may depend on the eigenvalue parameter.

The package computes eigenvalues, norming constants and oscillation counts,
implements the index-shifting transformations between such problems, and
reconstructs problems from spectral data, from two spectra, and from one
spectrum in the symmetric case.
"""

from .errors import (
    ConditioningError,
    DomainError,
    IntegrationError,
    ReconstructionError,
    ResolutionError,
    SearchError,
    SingularityError,
    SpectralError,
    ValidationError,
)
from .hn_algebra import (
    BRANCH_EQUAL,
    BRANCH_GREATER,
    RationalBC,
    index,
    pole_count,
    precedes,
    shift,
    smallest_pole,
    theta,
    up_down,
)
from .potential import (
    Potential,
    SolutionTrace,
    darboux_potential,
    project_zero_mean,
    symmetry_defect,
)
from .quasi_ode import (
    DEFAULT_CELLS,
    InitialData,
    integrate,
    phi,
    psi,
    solution_C,
    solution_S,
    solution_S_pi,
    wronskian,
)
from .spectrum import (
    EIG_COUNT_CAP,
    Problem,
    SpectralData,
    asymptotic_residuals,
    beta,
    char_deriv,
    char_function,
    eigenvalues,
    eigenvalues_near,
    hadamard_calibration,
    hadamard_product,
    norming_constant,
    oscillation_count,
    spectral_data,
)
from .transforms import (
    TRANSFORM_CELLS,
    ChainReduction,
    TransformRecord,
    gamma0_from_hat,
    kappa,
    reduce_chain,
    spectral_map_forward,
    spectral_map_inverse,
    t_hat,
    t_tilde,
)
from .inverse import (
    MomentTable,
    TwoSpectraInput,
    detect_indices,
    estimate_two_spectra_params,
    half_inverse_check,
    inverse_constant_bc,
    inverse_spectral_data,
    moment_table,
    recover_f_down,
    symmetric_inverse,
    two_problem_diagnostics,
    two_spectra_inverse,
)

__version__ = "0.1.0"
