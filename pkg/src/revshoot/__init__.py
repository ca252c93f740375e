"""Shooting method for symmetric homoclinic orbits of u'''' + a u'' - u + f(u, b) = 0."""

__version__ = "0.1.0"

from .system import (
    ORIGIN,
    NonlinearitySpec,
    Params,
    State,
    chi_residual,
    eval_F,
    eval_f,
    hamiltonian,
    reversal,
    vector_field,
)
from .spectral import (
    EquilibriumKind,
    EquilibriumSpectrum,
    NotSaddleCenterError,
    classify,
    classify_coefficients,
    linearization_constant,
    unstable_eigenpair,
)
from .integrate import (
    CrossingDirection,
    CrossingRecord,
    NonFiniteState,
    StepControl,
    StepSizeUnderflow,
    Trajectory,
    find_crossings,
    integrate,
)
from .homoclinic import (
    MISS_CERTIFY,
    BracketInvalid,
    CrossingIndexJumped,
    KnownSolution,
    LocusPoint,
    MissProfile,
    Outcome,
    ReconstructionRefused,
    ShotConfig,
    Sigma,
    closed_form_residual,
    known_solutions,
    miss,
    reconstruct_orbit,
    refine_root,
    seed_unstable,
    shoot,
    shot_trajectory,
    verify_reversibility,
)
from .scan import (
    GridSpec,
    GridTooLarge,
    ManifestMismatch,
    extract_loci,
    run_scan,
    scan_grid,
    search_bracket,
)
