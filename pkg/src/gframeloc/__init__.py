"""Operator-valued frames, off-diagonal decay of their Gram matrices and weighted co-orbit norms."""

__version__ = "0.1.0"

from .blockmat import (
    BlockMatrix,
    BlockVector,
    IndexSet,
    SvdFactorization,
    block_adjoint,
    block_apply,
    block_mul,
    block_pinv,
    flatten,
    hermitian_eig,
    pinv,
    pinv_via_formula,
    spectral_norm,
    svd,
    unflatten,
)
from .coorbit import (
    CoorbitProfile,
    SeqSpaceSpec,
    bochner_norm,
    conjugate_exponent,
    coorbit_norm,
    duality_pairing,
    holder_bound,
    membership_Vpw,
    norm_equivalence_check,
    reconstruction_profile,
)
from .exceptions import (
    ConfigError,
    GFrameError,
    InputError,
    InsufficientDataError,
    NotAFrameError,
    NotDualPairError,
)
from .gabor import (
    GaborGSystem,
    TFPoint,
    WindowOperator,
    build_gabor_gsystem,
    discrete_gaussian,
    gabor_gram_block_norms,
    m1_norm_proxy,
    modulate,
    op_translate,
    rank_one_gram_block_closed_form,
    stft,
    tf_shift,
    tf_shift_matrix,
    translate,
    verify_decay_theorem,
)
from .gframe import (
    FrameBounds,
    GFrame,
    analysis,
    canonical_dual,
    frame_bounds,
    frame_operator,
    gram,
    is_dual_pair,
    mixed_gram,
    reconstruct,
    synthesis,
    verify_gram_factorization,
)
from .localization import (
    AlgebraSpec,
    DecayFit,
    LocalizationReport,
    NormBracket,
    bgs_norm,
    block_norms,
    dual_weight,
    fit_polynomial_decay,
    jaffard_norm,
    localization_report,
    scalarize,
    schur_norm,
    solidity_check,
    weighted_opnorm,
)
from .weights import Weight, moderateness
