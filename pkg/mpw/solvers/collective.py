"""
Quasispin fast path: (N_f + 1)(N_b + 1) Dicke states, expanded back to the
column basis so the witness sees ordinary bit-string amplitudes.
"""
import logging

import numpy as np

from ..basis import composite_basis, dicke_embedding
from ..eigensolver import GroundState, fix_global_sign, lowest_eigenpair_dense
from ..model import build_collective_hamiltonian
from ..secondq_ops import StateVector, fermion_column_gauge

logger = logging.getLogger(__name__)


def build_path_basis(params):
    return composite_basis(params.n_f, params.n_b, "column")


def expand_collective(weights: np.ndarray, basis) -> np.ndarray:
    """Column-basis amplitude matrix of a |k_f, k_b> vector."""
    embed_f = dicke_embedding(basis.fermion) * fermion_column_gauge(basis.fermion)[:, None]
    embed_b = dicke_embedding(basis.boson)
    return embed_f @ weights @ embed_b.T


def solve_path(model, basis, opts):
    params = model.params
    hamiltonian = build_collective_hamiltonian(params)
    energy, vector = lowest_eigenpair_dense(hamiltonian)
    residual = float(np.linalg.norm(hamiltonian @ vector - energy * vector))
    logger.info(f"collective path: dense diagonalization, dimension {hamiltonian.shape[0]}")
    weights = vector.reshape(params.n_f + 1, params.n_b + 1)
    amplitudes = fix_global_sign(expand_collective(weights, basis).reshape(-1))
    return GroundState(
        energy, StateVector(amplitudes, basis), residual, 0, True, path="collective", dense=True
    )
