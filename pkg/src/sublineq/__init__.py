"""sublineq: solve u = sum_i G(u^{q_i} dsigma_i) + G sigma_0 + H and certify its bounds.

Kernels (Riesz, ball Green function, dense matrix, modified), finite atomic
measures, exact-sum potentials, localized embedding constants and intrinsic
potentials, monotone fixed-point solvers, and machine-checkable certificates
for the explicit two-sided estimates.
"""

from .errors import (
    ConfigurationError,
    DegenerateKernelError,
    DegenerateMeasureError,
    DomainError,
    EvaluationError,
    InternalInvariantError,
    NotApplicableError,
    SublineqError,
)
from .kernels import (
    Domain,
    Kernel,
    ball_center_modifier,
    check_wmp,
    estimate_qm_constant,
    green_ball_kernel,
    matrix_kernel,
    modify,
    qm_constant_exact,
    qs_constant_exact,
    riesz_kernel,
    symmetrize,
    wmp_constant_exact,
)
from .measures import (
    AtomicMeasure,
    Region,
    RegularGrid,
    from_atoms,
    from_density,
    grid_ball,
    grid_box,
    restrict,
    transform_modifier,
)
from .potentials import (
    BoundaryData,
    ScalarField,
    harmonic_extension_ball,
    kato_modulus,
    kato_table_to_csv,
    kato_tail,
    potential,
    sup_norm,
)
from .intrinsic import (
    IntrinsicResult,
    KappaResult,
    intrinsic_field,
    intrinsic_potential,
    kappa,
    kernel_ball,
)
from .solver import (
    Constants,
    Problem,
    SolveReport,
    SolverOptions,
    apply_map,
    constants,
    schauder_iterate,
    solve_from_above,
    solve_minimal,
    solve_modified,
    uniqueness_gap,
)
from .certify import (
    Certificate,
    batch_summary,
    check_bilateral,
    check_intrinsic_lower,
    check_iterated,
    check_lower,
    check_qm_product,
    check_qm_upper,
    check_qmm_bilateral,
    check_symmetric_lower,
    residual,
)
from .oracles import newton_minimal_root, simplex_grid_kappa
from .scenarios import SCENARIOS, run_scenario, scenario_list

__version__ = "0.1.0"
