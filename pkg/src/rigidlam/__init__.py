"""Infinitary lambda-terms with two non-idempotent intersection type
systems: a multiset-based one and a rigid, track-based one.

Modules:

    positions   tree and type positions, applicative depth, collapse
    terms       regular (possibly infinite) lambda-terms as cyclic graphs
    syntax      parsing and printing of term text
    reduction   head / leftmost / depth-stratified strategies, limit trees
    r0          the multiset system: checking, typed steps, head-normal typing
    stypes      the rigid system: sequence types, checking, lift and collapse
    sdynamics   typed reduction, expansion, residuals in the rigid system
    approx      the approximation order: join, meet, families, limits
    nf          typing normal forms along their support; unforgetfulness
    serialize   versioned JSON encodings for every artifact
    fixtures    reference terms, derivations, and golden files
    cli         the `rigidlam` command-line tool
"""

from .positions import (
    EPSILON,
    applicative_depth,
    collapse,
    code_position,
    format_position,
    parse_position,
    pos,
    position_code,
)
from .terms import (
    Term,
    TermError,
    UnguardedFix,
    app,
    app_many,
    bvar,
    fix,
    lam,
    reduce_at,
    substitute,
    subterm,
    term_equal,
    var,
)
from .syntax import ParseError, parse_term, print_term
from .reduction import (
    BohmTree,
    HeadDivergence,
    ReductionSequence,
    Step,
    adr,
    bohm_prefix,
    head_reduce,
    head_step,
    hh_reduce,
    is_hnf,
    is_normal,
    leftmost_step,
    limit_prefix,
)
from .r0 import (
    O,
    InvalidDerivation,
    Judgment,
    R0Derivation,
    RAbs,
    RApp,
    RAx,
    arrow,
    bounded_search_r0,
    check_r0,
    expand_head_r0,
    head_step_r0,
    is_unforgetful_r0,
    mset,
    size,
    subst_deriv,
    tvar,
    type_hnf,
    type_normal_form,
)
from .stypes import (
    InvalidSDerivation,
    SAbs,
    SApp,
    SAx,
    SDerivation,
    SHyp,
    SJudgment,
    TrackClash,
    all_judgments,
    check_s,
    collapse_deriv,
    collapse_sty,
    freeze_sctx,
    has_hypotheses,
    is_quantitative,
    lift_r0_to_s,
    sarrow,
    seq,
    seq_entries,
    seq_tail,
    size_s,
    stvar,
    supp_s,
)
from .sdynamics import (
    BipositionOutside,
    NotQuantitative,
    SubjectMismatch,
    equinecessary,
    equinecessary_closure,
    expand_s,
    lenlex_track,
    reduce_s,
    reference_track_policy,
    residual_biposition,
    residual_maps,
    residual_position,
    uniform_track_policy,
)
from .approx import (
    ApproximantFamily,
    NotContained,
    NotDirected,
    PathTooShort,
    StabilizedPrefix,
    expand_infinitary,
    find_finite_approximant,
    flatten,
    infinitary_reduce_family,
    join,
    leq_approx,
    meet,
    refutes_s_typability,
)
from .nf import (
    InvalidCandidate,
    NormalFormTypingFamily,
    NotNormalForm,
    SupportCandidate,
    called_rank,
    clev,
    finite_extension_family,
    forgetful_spots,
    full_support_family,
    hereditary_argument_subderivations,
    is_unforgetful_s,
    natural_extension,
    rank,
    rank_truncate,
    unforgetful_nf_typing,
)

from .serialize import (
    ASSIGNMENT_SCHEMA,
    BIPOSITIONS_SCHEMA,
    DERIVATION_SCHEMA,
    PATH_SCHEMA,
    SchemaError,
    dumps_assignment,
    dumps_bipositions,
    dumps_derivation,
    dumps_path,
    loads_assignment,
    loads_bipositions,
    loads_derivation,
    loads_path,
    parse_derivation,
    read_assignment,
    read_bipositions,
    read_path,
    read_term,
    write_derivation,
    write_path,
    write_term,
)

__version__ = "0.1.0"
