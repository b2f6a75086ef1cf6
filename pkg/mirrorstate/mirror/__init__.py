"""Mirror map between density matrices and the unconstrained dual vector space."""
from .maps import (
    RELATIVE_EIGENVALUE_FLOOR,
    decode,
    encode,
    from_model_space,
    project_to_gauge,
    to_dual,
    to_model_space,
    to_primal,
)
from .vectorize import SQRT2, herm_to_vec, matrix_dim, vec_to_herm

__all__ = [
    'RELATIVE_EIGENVALUE_FLOOR', 'decode', 'encode', 'from_model_space', 'project_to_gauge', 'to_dual', 'to_model_space',
    'to_primal', 'SQRT2', 'herm_to_vec', 'matrix_dim', 'vec_to_herm',
]
