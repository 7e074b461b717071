"""Workbench for finite partial non-deterministic matrices.

Core pieces: formula syntax and axiom decomposition (syntax), matrices with
multiple-conclusion consequence (matrix), axiom strengthening over look-ahead
profiles (strengthen), separator-based calculus generation (calculus),
analytic proof search (proofs), and text formats (specfile).
"""

from .calculus import (
    Discriminator,
    MCRule,
    Separator,
    SeparatorFailure,
    discriminator_from_separators,
    find_separators,
    generate_calculus,
    rule_sound,
    simplify,
    transfer_discriminator,
)
from .matrix import (
    ConsequenceResult,
    ExpansionFunction,
    OracleResult,
    PNMatrix,
    ResourceCapError,
    Sequent,
    axiom_consequence_oracle,
    consequence,
    eval_formula,
    expand,
    is_deterministic,
    is_total,
    refine,
    simple_refinement,
    t_m_contains,
    total_refinements,
)
from .proofs import (
    Closed,
    Expansion,
    Goal,
    SaturationFailure,
    check_proof,
    prove,
    render,
)
from .specfile import (
    CalculusFile,
    FileFormatError,
    SpecFile,
    parse_calculus_file,
    parse_matrix_file,
    write_calculus_file,
    write_matrix_file,
)
from .strengthen import (
    EquivalenceReport,
    FlatSlice,
    SharpResult,
    flat_slice,
    sharp_construct,
    sharp_semantic_probe,
    sharp_value_naming,
    slice_consequence,
    verify_equivalence,
)
from .syntax import (
    App,
    Formula,
    NotSimpleError,
    ParseError,
    Signature,
    SimpleAxiom,
    Var,
    apply_string,
    decompose_simple,
    format_formula,
    lookahead_set,
    parse_formula,
    s_subformulas,
    subformulas,
    substitute,
    variables,
)

__version__ = "0.1.0"
