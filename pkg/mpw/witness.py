"""
Sector-resolved one-particle and particle-hole reduced density matrices.

For a sector with ``r`` modes the particle-hole matrix is

    G[(i,j),(l,k)] = <psi| c†_j c_i c†_l c_k |psi> - D[i][j] D[l][k]

with pair ``(i, j)`` flattened to ``i * r + j`` (0-based modes). Its largest
eigenvalue ``lambda_G`` counts the particle-hole pairs in the dominant
excitonic mode: 1 for a product state, at most ``N (r - N) / r``.

Operators always act in the full C(r, N) Fock space of the sector; a state
solved in a restricted subspace is embedded first. Only the sector's
reduced state enters, so the amplitude matrix is compressed to
``U S`` (thin SVD) before the ``r^2`` operator applications.
"""
import dataclasses
import functools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .basis import Restriction, Sector, SectorBasis, sector_basis
from .errors import IntegrityError, NormalizationError, ParameterError
from .model import build_model
from .mpw_config import SolveOptions, SystemParams
from .secondq_ops import StateVector, excitation_operators
from .solvers import get_path

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-8
TRACE_TOL = 1e-10
OCCUPATION_TOL = 1e-10
PSD_TOL = 1e-6
BOUND_TOL = 1e-6
BASELINE_TOL = 1e-6
SATURATION_TOL = 0.05
ONSET_LEVEL = 1.5
PAIRING_LIMIT_COUPLING = -1e4
VALIDATED_MAX_N = 3

_warned_regimes = set()


@dataclass
class OneParticleRDM:
    matrix: np.ndarray
    sector: Sector

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))


@dataclass
class ParticleHoleRDM:
    matrix: np.ndarray
    sector: Sector
    n_modes: int

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def element(self, i: int, j: int, l: int, k: int) -> float:
        r = self.n_modes
        return float(self.matrix[i * r + j, l * r + k])


@dataclass
class SectorReduction:
    """Full-Fock-space factor ``Phi`` of one sector's reduced state, rho = Phi Phi^T."""

    sector: Sector
    factor: np.ndarray
    full_basis: SectorBasis


def reduce_sector(psi: StateVector, sector: Sector) -> SectorReduction:
    sector = Sector(sector)
    norm = psi.norm()
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"state must be normalized, got norm {norm:.12g}")
    matrix = psi.as_matrix()
    active = psi.basis.fermion
    if sector is Sector.BOSON:
        matrix, active = matrix.T, psi.basis.boson
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    keep = s > 1e-12 * s[0]
    factor = u[:, keep] * s[keep]
    full = sector_basis(active.n_particles, Restriction.FULL)
    if active.restriction is not Restriction.FULL:
        rows, found = full.ranks(active.states)
        if not np.all(found):
            raise IntegrityError(f"{active!r} is not contained in the full sector basis")
        embedded = np.zeros((len(full), factor.shape[1]))
        embedded[rows] = factor
        factor = embedded
    return SectorReduction(sector, factor, full)


def _as_reduction(psi, sector) -> SectorReduction:
    if isinstance(psi, SectorReduction):
        if psi.sector is not Sector(sector):
            raise ParameterError(f"reduction is for the {psi.sector.value} sector, not {Sector(sector).value}")
        return psi
    return reduce_sector(psi, sector)


def _operators(reduction: SectorReduction) -> tuple:
    return excitation_operators(reduction.full_basis.n_particles, reduction.sector.statistics)


def one_particle_rdm(psi, sector) -> OneParticleRDM:
    """D[i][j] = <psi| c†_i c_j |psi>; the other sector is traced out."""
    reduction = _as_reduction(psi, sector)
    r = reduction.full_basis.n_modes
    phi = reduction.factor
    values = [np.vdot(phi, op @ phi) for op in _operators(reduction)]
    return OneParticleRDM(np.array(values, dtype=float).reshape(r, r), reduction.sector)


def _gram(reduction: SectorReduction, shift: np.ndarray, memory_budget: int) -> np.ndarray:
    ops = _operators(reduction)
    phi = reduction.factor
    full_dim, rank = phi.shape
    n_pairs = len(ops)
    per_column = max(1, n_pairs * full_dim * 8)
    chunk = int(max(1, min(rank, memory_budget // per_column)))
    if chunk < rank:
        logger.info(f"particle-hole matrix streamed in blocks of {chunk}/{rank} columns")
    gram = np.zeros((n_pairs, n_pairs))
    for start in range(0, rank, chunk):
        block = phi[:, start : start + chunk]
        excitations = np.empty((n_pairs, block.size))
        for idx, op in enumerate(ops):
            excitations[idx] = (op @ block - shift[idx] * block).ravel()
        gram += excitations @ excitations.T
    return gram


def particle_hole_rdm(psi, sector, D: OneParticleRDM, memory_budget: int = SolveOptions.memory_budget) -> ParticleHoleRDM:
    """Centered particle-hole matrix: Gram matrix of (c†_l c_k - D[l][k]) psi."""
    reduction = _as_reduction(psi, sector)
    r = reduction.full_basis.n_modes
    if D.matrix.shape != (r, r):
        raise ParameterError(f"one-particle RDM has shape {D.matrix.shape}, sector has {r} modes")
    return ParticleHoleRDM(_gram(reduction, D.matrix.reshape(-1), memory_budget), reduction.sector, r)


def particle_hole_rdm_subtracted(psi, sector, D: OneParticleRDM, memory_budget: int = SolveOptions.memory_budget) -> ParticleHoleRDM:
    """Uncentered <c†_j c_i c†_l c_k> minus vec(D) vec(D)^T."""
    reduction = _as_reduction(psi, sector)
    r = reduction.full_basis.n_modes
    d_flat = D.matrix.reshape(-1)
    raw = _gram(reduction, np.zeros(r * r), memory_budget)
    return ParticleHoleRDM(raw - np.outer(d_flat, d_flat), reduction.sector, r)


def _matrix(G) -> np.ndarray:
    return G.matrix if isinstance(G, ParticleHoleRDM) else np.asarray(G, dtype=float)


def largest_eigenvalue(G) -> float:
    matrix = _matrix(G)
    if matrix.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    if asymmetry > 1e-8 * scale:
        raise IntegrityError(f"particle-hole matrix is not symmetric (max |G - G^T| = {asymmetry:.3e})")
    values = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    if values[0] < -PSD_TOL:
        raise IntegrityError(f"particle-hole matrix is not positive semidefinite (min eigenvalue {values[0]:.3e})")
    return float(values[-1])


def dominant_mode(G) -> np.ndarray:
    """Eigenvector of lambda_G as an (r, r) matrix of c†_i c_j amplitudes."""
    matrix = _matrix(G)
    r = int(round(np.sqrt(matrix.shape[0])))
    _, vectors = np.linalg.eigh(0.5 * (matrix + matrix.T))
    mode = vectors[:, -1]
    if mode[np.argmax(np.abs(mode))] < 0:
        mode = -mode
    return mode.reshape(r, r)


def theoretical_bound(n: int, r: int) -> float:
    if n < 1 or n > r:
        raise ParameterError(f"the bound needs 1 <= N <= r, got N={n}, r={r}")
    return n * (r - n) / r


def check_one_particle_rdm(D: OneParticleRDM, n_particles: int) -> list:
    """Itemized invariant violations of a one-particle RDM (empty when healthy)."""
    failures = []
    if abs(D.trace - n_particles) > TRACE_TOL:
        failures.append(f"{D.sector.value}: trace(D) = {D.trace:.15g}, expected {n_particles}")
    values = D.eigenvalues()
    if values[0] < -OCCUPATION_TOL or values[-1] > 1 + OCCUPATION_TOL:
        failures.append(f"{D.sector.value}: D eigenvalues span [{values[0]:.3e}, {values[-1]:.12g}], outside [0, 1]")
    if np.max(np.abs(D.matrix - D.matrix.T)) > 1e-10:
        failures.append(f"{D.sector.value}: D is not symmetric")
    return failures


@dataclass
class SectorWitness:
    lambda_g: float = 0.0
    bound: float = 0.0
    min_g_eigenvalue: float = 0.0
    lambda_d: float = 0.0


@dataclass
class WitnessDiagnostics:
    path: str
    dense: bool
    iterations: int
    residual: float
    converged: bool
    outside_validated_regime: bool = False
    min_g_eigenvalue_f: float = 0.0
    min_g_eigenvalue_b: float = 0.0
    lambda_d_f: float = 0.0
    lambda_d_b: float = 0.0
    wall_time_ms: float = 0.0


@dataclass
class WitnessResult:
    params: SystemParams
    lambda_g_f: float
    lambda_g_b: float
    bound_f: float
    bound_b: float
    energy: float
    diagnostics: WitnessDiagnostics = field(default=None)

    @property
    def converged(self) -> bool:
        return self.diagnostics.converged

    @property
    def above_baseline_f(self) -> bool:
        return self.lambda_g_f > 1.0 + BASELINE_TOL

    @property
    def above_baseline_b(self) -> bool:
        return self.lambda_g_b > 1.0 + BASELINE_TOL

    @property
    def saturated_f(self) -> bool:
        return is_saturated(self.lambda_g_f, self.params.n_f)

    @property
    def saturated_b(self) -> bool:
        return is_saturated(self.lambda_g_b, self.params.n_b)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self.params)
        out.update(
            energy=self.energy,
            lambda_g_f=self.lambda_g_f,
            lambda_g_b=self.lambda_g_b,
            bound_f=self.bound_f,
            bound_b=self.bound_b,
            above_baseline_f=self.above_baseline_f,
            above_baseline_b=self.above_baseline_b,
            saturated_f=self.saturated_f,
            saturated_b=self.saturated_b,
        )
        out["diagnostics"] = dataclasses.asdict(self.diagnostics)
        return out


def _sector_witness(psi: StateVector, sector: Sector, n: int, opts: SolveOptions) -> SectorWitness:
    reduction = reduce_sector(psi, sector)
    D = one_particle_rdm(reduction, sector)
    failures = check_one_particle_rdm(D, n)
    if failures:
        raise IntegrityError("; ".join(failures))
    G = particle_hole_rdm(reduction, sector, D, memory_budget=opts.memory_budget)
    lam = largest_eigenvalue(G)
    bound = theoretical_bound(n, 2 * n)
    if lam > max(1.0, bound) + BOUND_TOL:
        if n >= 3:
            raise IntegrityError(f"{sector.value}: lambda_G = {lam:.12g} exceeds the bound {bound:.12g}")
    if lam > bound + BOUND_TOL and n < 3:
        logger.info(f"{sector.value}: lambda_G = {lam:.6g} exceeds N(r-N)/r = {bound:.6g} at N = {n} (uncorrelated baseline is 1)")
    return SectorWitness(lam, bound, float(G.eigenvalues()[0]), float(D.eigenvalues()[-1]))


def compute_witness(params: SystemParams, opts: SolveOptions = None) -> WitnessResult:
    opts = opts or SolveOptions()
    start = time.perf_counter()
    build_basis, solve = get_path(opts.solver)
    model = build_model(params)
    ground = solve(model, build_basis(params), opts)
    if not ground.converged:
        logger.warning(f"ground state for {params} did not converge; witness values are unreliable")

    outside = opts.solver != "full" and max(params.n_f, params.n_b) > VALIDATED_MAX_N
    if outside and opts.solver not in _warned_regimes:
        _warned_regimes.add(opts.solver)
        logger.warning(
            f"{opts.solver} path used at N > {VALIDATED_MAX_N}; the symmetric-sector assumption is only "
            f"checked against the full space up to N = {VALIDATED_MAX_N}"
        )

    sectors = {}
    for sector in Sector:
        n = params.n_particles(sector)
        sectors[sector] = _sector_witness(ground.vector, sector, n, opts) if n > 0 else SectorWitness()
    f, b = sectors[Sector.FERMION], sectors[Sector.BOSON]
    diagnostics = WitnessDiagnostics(
        path=ground.path,
        dense=ground.dense,
        iterations=ground.iterations,
        residual=ground.residual,
        converged=ground.converged,
        outside_validated_regime=outside,
        min_g_eigenvalue_f=f.min_g_eigenvalue,
        min_g_eigenvalue_b=b.min_g_eigenvalue,
        lambda_d_f=f.lambda_d,
        lambda_d_b=b.lambda_d,
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
    )
    return WitnessResult(params, f.lambda_g, b.lambda_g, f.bound, b.bound, ground.energy, diagnostics)


@functools.lru_cache(maxsize=None)
def pairing_limit(n: int) -> float:
    """
    ``lambda_G`` of a lone sector of ``n`` pairs as ``|V| / eps`` grows without bound.

    The pair-scattering term squeezes the quasispin rather than polarizing it, so
    the limit stays below ``N / 2`` for N > 2 (``1 + sqrt(3) / 2`` at N = 4).
    Odd N keeps a first-order ``eps`` splitting, hence ``eps = 1`` instead of 0.
    """
    if n < 0:
        raise ParameterError(f"pair count must be >= 0, got {n}")
    if n == 0:
        return 0.0
    params = SystemParams(n, 0, eps_f=1.0, v_f=PAIRING_LIMIT_COUPLING)
    return compute_witness(params, SolveOptions(solver="collective")).lambda_g_f


def is_saturated(lam: float, n: int) -> bool:
    """Within 0.05 of :func:`pairing_limit`; never for N <= 2, where the limit is the baseline."""
    if n <= 0:
        return False
    limit = pairing_limit(n)
    return limit > 1.0 + SATURATION_TOL and lam >= limit - SATURATION_TOL
