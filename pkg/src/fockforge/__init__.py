"""Finite-grid Fock-space toolkit for density/phase reconstructions of field operators."""

from .lattice import BoundaryMode, GridSpec, Mode, Spin, enumerate_modes, mode_index
from .fock_core import (
    FockBasis,
    SparseOperator,
    Statistics,
    build_annihilation,
    build_basis,
    build_creation,
    build_fock_space,
    build_ladder,
    commutator,
    anticommutator,
    operator_norm,
)
from .bilinears import build_current, build_delta_psi, build_delta_rho, build_density, build_field
from .transeries import GradedSeries, TransSeries, evaluate_at_delta, lemma_check, series_apply_function
from .phase import FermiParams, PhaseFunctional, build_phase_hd, recursion_residual
from .dpva import (
    build_X_current_form,
    build_X_psi_form,
    build_psi_tilde,
    verify_canonical_commutator,
    verify_conjecture,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryMode",
    "GridSpec",
    "Mode",
    "Spin",
    "enumerate_modes",
    "mode_index",
    "FockBasis",
    "SparseOperator",
    "Statistics",
    "build_annihilation",
    "build_basis",
    "build_creation",
    "build_fock_space",
    "build_ladder",
    "commutator",
    "anticommutator",
    "operator_norm",
    "build_current",
    "build_delta_psi",
    "build_delta_rho",
    "build_density",
    "build_field",
    "GradedSeries",
    "TransSeries",
    "evaluate_at_delta",
    "lemma_check",
    "series_apply_function",
    "FermiParams",
    "PhaseFunctional",
    "build_phase_hd",
    "recursion_residual",
    "build_X_current_form",
    "build_X_psi_form",
    "build_psi_tilde",
    "verify_canonical_commutator",
    "verify_conjecture",
]
