"""Weighted shifts on rooted directed trees and their unitary equivalence."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .analytic import (
    BPEReport,
    CauchyDualShift,
    KernelValue,
    ModelSpace,
    bpe_radius,
    cauchy_dual,
    kernel_eval,
    model_space,
    mz_gram_check,
)
from .equivalence import (
    BlockUnitary,
    EquivalenceVerdict,
    FirstMismatch,
    build_block_unitary,
    change_of_basis,
    decide_nonperiodic,
    joint_multiplicity_oracle,
    theorem_criterion,
    wold_isometry_oracle,
)
from .errors import *  # noqa: F401,F403
from .seqclass import (
    ClosedForm,
    EventuallyPeriodic,
    MomentSequenceSpec,
    PeriodicityVerdict,
    PrefixOnly,
    bergman,
    classify,
    dirichlet,
    evaluate,
    parse_sequence_spec,
    tails_equal,
)
from .shift import (
    BalancedShift,
    MomentTable,
    ShiftOperator,
    apply_adjoint,
    apply_shift,
    balanced_shift,
    bergman_shift,
    bergman_weights,
    dirichlet_shift,
    dirichlet_weights,
    is_balanced,
    is_locally_power_balanced,
    moment,
    moment_formula,
)
from .specfile import Report, load_shift, load_specs
from .tree import (
    ALL_RAYS,
    INFINITE,
    GenerationProfile,
    RootedTree,
    TailSpec,
    branching_index,
    branching_vertices,
    build_tree,
    generation,
    generation_profile,
    kary_tree,
    path_tree,
    self_similar,
)
from .wandering import (
    WanderingDecomposition,
    check_mutual_orthogonality,
    complement_basis,
    gram_restriction,
    kernel_basis,
)
