"""Domain-wall and reflecting-end partition functions of six-vertex and SOS models."""

from .closed_forms import (antisym_sum, crossing_symmetrized_sum, izergin_determinant, zbar,
                           lagrange_sum, refl_symmetrized_sum, six_vertex_refl_formula,
                           symmetrized_sum, tfk_determinant, z_ell)
from .errors import (BoundaryPole, DwpfError, DynamicalPole, GenericPositionViolation,
                     GuardViolation, InvalidContext, PoleAtEvaluation, ReflectionPole,
                     SeriesDivergence, SizeLimit)
from .functional import (CoeffSet, Eigenvalues, Korepin, coeffs_6v, coeffs_refl,
                         eigenvalues_refl, functional_residual, korepin_factor,
                         recipe_build, special_zero_check)
from .models import (dyn_r_matrix, dyn_ybe_residual, k_matrix, r_matrix,
                     reflection_residual, ybe_residual)
from .numerics import (BracketContext, Mode, bracket, bracket_product, determinant,
                       for_each_permutation, for_each_reflection)
from .oracle import (SpinState, a_operator_eigenvalues, count_dw_configs, dwpf_contract,
                     dwpf_enumerate, refl_contract)
from .params import ModelParams, PartitionValue, random_params, relative_residual

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
