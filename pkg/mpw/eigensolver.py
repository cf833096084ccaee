import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import CompositeBasis
from .errors import ParameterError, ResourceError
from .mpw_config import SolveOptions
from .secondq_ops import CompiledHamiltonian, StateVector

logger = logging.getLogger(__name__)

FLOAT_BYTES = 8


@dataclass
class GroundState:
    energy: float
    vector: StateVector
    residual: float
    iterations: int
    converged: bool
    path: str = "column"
    dense: bool = False


def fix_global_sign(vector: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Make the first non-negligible amplitude positive."""
    nonzero = np.nonzero(np.abs(vector) > atol)[0]
    if len(nonzero) and vector[nonzero[0]] < 0:
        return -vector
    return vector


def lowest_eigenpair_dense(matrix, symmetry_tol: float = 1e-10) -> tuple:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ParameterError(f"expected a non-empty square matrix, got shape {a.shape}")
    asymmetry = float(np.max(np.abs(a - a.T)))
    if asymmetry > symmetry_tol:
        raise ParameterError(f"matrix is not symmetric (max |A - A^T| = {asymmetry:.3e})")
    a = 0.5 * (a + a.T)
    values, vectors = scipy.linalg.eigh(a, subset_by_index=[0, 0])
    return float(values[0]), fix_global_sign(vectors[:, 0])


def _lowest_ritz_pair(alphas: list, betas: list) -> tuple:
    if len(alphas) == 1:
        return alphas[0], np.ones(1)
    values, vectors = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas))
    return float(values[0]), vectors[:, 0]


def lanczos_lowest(matvec, dim: int, opts: SolveOptions) -> tuple:
    """
    Restarted Lanczos for the lowest eigenpair of a symmetric operator.

    Each cycle builds at most ``opts.krylov_size`` vectors and restarts from
    the current Ritz vector; iterations (matvecs inside cycles) are capped by
    ``opts.max_iterations``. Returns ``(energy, vector, residual, iterations,
    converged)`` with the energy taken as the Rayleigh quotient of the
    returned vector.
    """
    krylov = min(opts.krylov_size, dim)
    needed = dim * (krylov + 3) * FLOAT_BYTES
    if needed > opts.memory_budget:
        raise ResourceError(
            f"Lanczos on dimension {dim} needs ~{needed / 1024**3:.2f} GiB, budget is {opts.memory_budget / 1024**3:.2f} GiB"
        )
    rng = np.random.default_rng(opts.seed)
    start = rng.standard_normal(dim)
    full_reorth = opts.reorthogonalization == "full"

    iterations = 0
    energy, vector, residual = np.nan, start / np.linalg.norm(start), np.inf
    basis = np.empty((krylov, dim))
    while iterations < opts.max_iterations:
        q = vector / np.linalg.norm(vector)
        alphas, betas = [], []
        for j in range(krylov):
            basis[j] = q
            w = matvec(q)
            alpha = float(q @ w)
            w -= alpha * q
            if j > 0:
                w -= betas[-1] * basis[j - 1]
            if full_reorth:
                # twice is enough (Kahan-Parlett)
                for _ in range(2):
                    w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
            alphas.append(alpha)
            iterations += 1
            beta = float(np.linalg.norm(w))
            theta, s = _lowest_ritz_pair(alphas, betas)
            estimate = beta * abs(s[-1])
            if estimate <= opts.tolerance or beta <= 1e-14 * max(1.0, abs(theta)) or iterations >= opts.max_iterations:
                break
            betas.append(beta)
            q = w / beta
        vector = basis[: len(alphas)].T @ s
        vector /= np.linalg.norm(vector)
        h_vector = matvec(vector)
        energy = float(vector @ h_vector)
        residual = float(np.linalg.norm(h_vector - energy * vector))
        logger.debug(f"lanczos cycle: iterations={iterations}, energy={energy:.12g}, residual={residual:.3e}")
        if residual <= opts.tolerance:
            return energy, fix_global_sign(vector), residual, iterations, True
    return energy, fix_global_sign(vector), residual, iterations, False


def solve_ground(model, basis: CompositeBasis, opts: SolveOptions = None, path: str = None) -> GroundState:
    """Lowest eigenpair of ``model`` on ``basis``: dense up to ``opts.dense_threshold``, Lanczos beyond."""
    opts = opts or SolveOptions()
    path = path or opts.solver
    layout = model.layout
    if (basis.fermion.n_particles, basis.boson.n_particles) != (layout.n_f, layout.n_b):
        raise ParameterError(
            f"basis holds ({basis.fermion.n_particles}, {basis.boson.n_particles}) particles, "
            f"model expects ({layout.n_f}, {layout.n_b})"
        )
    hamiltonian = CompiledHamiltonian(model.all_terms, basis)
    dim = basis.dimension
    if dim <= opts.dense_threshold:
        needed = dim * dim * FLOAT_BYTES
        if needed > opts.memory_budget:
            raise ResourceError(f"dense solve of dimension {dim} needs {needed / 1024**3:.2f} GiB")
        logger.info(f"{path} path: dense diagonalization, dimension {dim}")
        energy, vector = lowest_eigenpair_dense(hamiltonian.to_dense())
        residual = float(np.linalg.norm(hamiltonian.matvec(vector) - energy * vector))
        return GroundState(energy, StateVector(vector, basis), residual, 0, True, path=path, dense=True)

    logger.info(f"{path} path: Lanczos, dimension {dim}")
    energy, vector, residual, iterations, converged = lanczos_lowest(hamiltonian.matvec, dim, opts)
    if not converged:
        logger.warning(
            f"Lanczos did not converge in {iterations} iterations (residual {residual:.3e} > {opts.tolerance:.1e})"
        )
    return GroundState(energy, StateVector(vector, basis), residual, iterations, converged, path=path)
