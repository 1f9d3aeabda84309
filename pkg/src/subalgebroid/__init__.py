"""Singular subalgebroids of polynomial Lie algebroids and their holonomy groupoids."""

from .algebroid import (
    AlgebroidPresentation,
    InvolutivityCertificate,
    Section,
    SingularSubalgebroid,
    bracket,
    classify_leaves,
    evaluation_ranks,
    fiber_dim_at,
    involutivity_certificate,
    leaf_trace,
    minimal_generators_at,
    pushforward_generators,
    syzygy_basis_upto,
    verify_presentation,
)
from .groupoid import (
    AnchorMorphism,
    GroupoidElement,
    IdentityMorphism,
    MatrixGroup,
    PairBox,
    PairTorus,
    TorusGroupCovering,
    TorusPairCovering,
    Transformation,
    anchor_flow,
    right_invariant_flow,
)
from .holonomy import (
    Chart,
    QuotientOracle,
    Verdict,
    Word,
    carried_bisection,
    chart_domain_check,
    compose,
    covering_lift_word,
    equivalent,
    identity_test,
    invert,
    pushforward_word,
    word_phi,
)
from .polycore import Polynomial, PolyVector, QMatrix, poly_parse, poly_print

__version__ = "0.1.0"
