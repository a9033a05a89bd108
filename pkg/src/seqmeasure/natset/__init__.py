"""Computable subsets of the naturals with exact asymptotic densities."""

from . import config
from .density import (
    DensityReport,
    cesaro_density,
    count_below,
    count_error_bound,
    density_report,
    density_value,
    exact_density,
)
from .dyadic import block_count_below, block_index, block_of, block_point, vdc
from .ops import (
    block_support_bound,
    block_trace,
    eventual,
    family_instantiate,
    family_limit,
    family_limit_member,
    family_member,
    family_shrinks,
    flatten,
    member,
    prefix,
    prefix_bits,
)
from .terms import (
    EMPTY,
    FULL,
    Block,
    Compl,
    Const,
    Diff,
    Dyadic,
    FamOp,
    Family,
    Finite,
    Inter,
    Lift,
    SetTerm,
    Shrink,
    Stack,
    Union,
    Vdc,
    compl,
    diff,
    dyadic_phi,
    fam_op,
    family_from_json,
    family_to_json,
    inter,
    lifted_union,
    phi,
    term_from_json,
    term_to_json,
    union,
)

__all__ = [name for name in dir() if not name.startswith("_")]
