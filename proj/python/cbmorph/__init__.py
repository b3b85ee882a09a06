"""Parametric Craig-Bampton reduction with multi-region surrogates.

Thin re-export of the compiled core. Matrices are NumPy arrays in SI units
(kg, N/m); trained routers and surrogates serialize to the same JSON the
command-line driver writes.
"""

from ._core import (
    CBReduced,
    CbmorphError,
    CommonBasis,
    Generator,
    IllConditionedProjectionError,
    InputError,
    KrigingModel,
    NumericalError,
    ParameterSpace,
    ProjectionDiagnostics,
    RegionPrediction,
    RegionTagging,
    Router,
    Substructure,
    Surrogate,
    SurrogatePrediction,
    SvmParams,
    build_lattice,
    build_resonator_cell,
    cb_reduce,
    cb_reduce_common,
    chain_frf,
    common_basis,
    kriging_fit,
    latin_hypercube,
    lattice_k2_generator,
    linear_grid,
    numerical_rank,
    projection_diagnostics,
    reconstruction_error,
    resonator_generator,
    resonator_space,
    sym_generalized_eig,
    tag_regions,
    train_router,
    train_surrogate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
