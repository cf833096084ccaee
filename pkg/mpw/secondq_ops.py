"""
Second-quantized operators on occupation bit strings.

Fermionic ladder operators carry the Jordan-Wigner sign
``(-1) ** (occupied modes strictly below the mode)`` in local sector order;
hard-core bosonic ones carry no sign. Terms are products of ladder operators
written left to right as in operator notation and applied right to left to
kets.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sps

from .basis import CompositeBasis, OccupationState, Sector, SectorBasis, Statistics, sector_basis
from .errors import IntegrityError, ParameterError

logger = logging.getLogger(__name__)


def _jordan_wigner_sign(bits: int, mode: int) -> int:
    return -1 if (bits & ((1 << mode) - 1)).bit_count() & 1 else 1


@dataclass(frozen=True)
class ExcitationOp:
    """``c†_create c_annihilate`` on sector-local modes."""

    create: int
    annihilate: int
    statistics: Statistics = Statistics.FERMION


@dataclass(frozen=True)
class Ladder:
    sector: Sector
    mode: int
    dagger: bool

    def adjoint(self) -> "Ladder":
        return Ladder(self.sector, self.mode, not self.dagger)

    def __str__(self) -> str:
        symbol = "f" if self.sector is Sector.FERMION else "b"
        return f"{symbol}{'†' if self.dagger else ''}_{self.mode}"


def create(sector: Sector, mode: int) -> Ladder:
    return Ladder(Sector(sector), mode, True)


def annihilate(sector: Sector, mode: int) -> Ladder:
    return Ladder(Sector(sector), mode, False)


@dataclass(frozen=True)
class HamiltonianTerm:
    coefficient: float
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        n_fermion = sum(f.sector is Sector.FERMION for f in self.factors)
        if n_fermion % 2:
            raise ParameterError(f"term {self} has an odd number of fermionic operators")

    def adjoint(self) -> "HamiltonianTerm":
        return HamiltonianTerm(self.coefficient, tuple(f.adjoint() for f in reversed(self.factors)))

    def sector_factors(self, sector: Sector) -> tuple:
        # fermionic parts are even, so they commute with the other sector
        return tuple(f for f in self.factors if f.sector is sector)

    def __str__(self) -> str:
        return f"{self.coefficient:+g} " + " ".join(str(f) for f in self.factors)


def is_hermitian_closed(terms, atol: float = 1e-12) -> bool:
    weights = {}
    for term in terms:
        weights[term.factors] = weights.get(term.factors, 0.0) + term.coefficient
    return all(abs(weights.get(tuple(f.adjoint() for f in reversed(key)), 0.0) - w) <= atol for key, w in weights.items())


def apply_excitation(op: ExcitationOp, state: OccupationState) -> tuple:
    """Return ``(new_state, sign)``; sign 0 means the state is annihilated."""
    bits = state.bits
    fermionic = op.statistics is Statistics.FERMION
    if not bits >> op.annihilate & 1:
        return state, 0
    sign = _jordan_wigner_sign(bits, op.annihilate) if fermionic else 1
    bits ^= 1 << op.annihilate
    if bits >> op.create & 1:
        return state, 0
    if fermionic:
        sign *= _jordan_wigner_sign(bits, op.create)
    return OccupationState(bits | 1 << op.create), sign


def apply_ladders(ladders, bits: np.ndarray, statistics: Statistics) -> tuple:
    """Vectorized action of a ladder-operator product on an array of bit strings."""
    bits = np.array(bits, dtype=np.uint64, copy=True)
    signs = np.ones(bits.shape, dtype=np.int64)
    fermionic = statistics is Statistics.FERMION
    for ladder in reversed(tuple(ladders)):
        mask = 1 << ladder.mode
        occupied = (bits & np.uint64(mask)) != 0
        alive = (signs != 0) & (occupied != ladder.dagger)
        if fermionic:
            parity = np.bitwise_count(bits & np.uint64(mask - 1)) & 1
            signs = np.where(alive, np.where(parity == 1, -signs, signs), 0)
        else:
            signs = np.where(alive, signs, 0)
        bits = np.where(alive, bits ^ np.uint64(mask), bits)
    return bits, signs


def _check_modes(ladders, basis: SectorBasis):
    for ladder in ladders:
        if not 0 <= ladder.mode < basis.n_modes:
            raise ParameterError(f"operator {ladder} outside the {basis.n_modes}-mode sector")


def sector_operator(ladders, source: SectorBasis, target: SectorBasis = None, statistics=None, strict: bool = True):
    """Sparse (|target| x |source|) matrix of a ladder-operator product."""
    target = source if target is None else target
    ladders = tuple(ladders)
    _check_modes(ladders, source)
    if statistics is None:
        statistics = ladders[0].sector.statistics if ladders else Statistics.HARDCORE_BOSON
    new_bits, signs = apply_ladders(ladders, source.states, statistics)
    rows, found = target.ranks(new_bits)
    alive = signs != 0
    if strict and np.any(alive & ~found):
        leaked = new_bits[alive & ~found][0]
        raise IntegrityError(
            f"{' '.join(map(str, ladders))} maps a basis state to {int(leaked):#b}, outside the active {target!r}"
        )
    keep = alive & found
    cols = np.nonzero(keep)[0]
    return sps.csr_matrix(
        (signs[keep].astype(float), (rows[keep], cols)), shape=(len(target), len(source))
    )


def fermion_column_gauge(sector: SectorBasis) -> np.ndarray:
    """
    Sign of the permutation from column-interleaved to block mode order, per state.

    In interleaved order the fermionic column moves carry no sign, so
    ``diag(s) H_f diag(s)`` on the column subspace equals the hard-core
    boson Hamiltonian at the same couplings.
    """
    n = sector.n_modes // 2
    states = sector.states
    lower = states & np.uint64((1 << n) - 1)
    inversions = np.zeros(len(states), dtype=np.int64)
    for p in range(n):
        upper_p = (states >> np.uint64(p + n)) & np.uint64(1)
        lower_above = np.bitwise_count(lower >> np.uint64(p + 1)).astype(np.int64)
        inversions += upper_p.astype(np.int64) * lower_above
    return np.where(inversions % 2 == 1, -1.0, 1.0)


@dataclass
class StateVector:
    amplitudes: np.ndarray
    basis: CompositeBasis

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float).reshape(-1)
        if self.amplitudes.size != self.basis.dimension:
            raise ParameterError(
                f"state has {self.amplitudes.size} amplitudes, basis dimension is {self.basis.dimension}"
            )
        if not np.all(np.isfinite(self.amplitudes)):
            raise ParameterError("state vector contains non-finite amplitudes")

    def as_matrix(self) -> np.ndarray:
        """Amplitudes as a (|fermion basis|, |boson basis|) matrix."""
        return self.amplitudes.reshape(self.basis.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> float:
        return float(self.amplitudes @ other.amplitudes)


def _split_term(term: HamiltonianTerm, basis: CompositeBasis) -> tuple:
    fermion_ladders = term.sector_factors(Sector.FERMION)
    boson_ladders = term.sector_factors(Sector.BOSON)
    f_op = sector_operator(fermion_ladders, basis.fermion, statistics=Statistics.FERMION) if fermion_ladders else None
    b_op = sector_operator(boson_ladders, basis.boson, statistics=Statistics.HARDCORE_BOSON) if boson_ladders else None
    return f_op, b_op


def _act(f_op, b_op, psi: np.ndarray) -> np.ndarray:
    out = psi if f_op is None else f_op @ psi
    if b_op is not None:
        out = (b_op @ out.T).T
    return out


def apply_term(term: HamiltonianTerm, psi: StateVector) -> StateVector:
    f_op, b_op = _split_term(term, psi.basis)
    out = term.coefficient * _act(f_op, b_op, psi.as_matrix())
    return StateVector(np.array(out, dtype=float).reshape(-1), psi.basis)


def matvec(terms, psi: StateVector) -> StateVector:
    out = np.zeros(psi.basis.dimension)
    for term in terms:
        out += apply_term(term, psi).amplitudes
    return StateVector(out, psi.basis)


class CompiledHamiltonian:
    """
    Term list folded into per-sector sparse matrices.

    Pure-sector terms are summed into one matrix per sector; cross-sector
    terms are grouped by their boson factor so that ``H psi`` costs a handful
    of sparse products on the (|fermion|, |boson|) amplitude matrix.
    """

    def __init__(self, terms, basis: CompositeBasis):
        self.basis = basis
        n_f, n_b = basis.shape
        self.fermion_part = sps.csr_matrix((n_f, n_f))
        self.boson_part = sps.csr_matrix((n_b, n_b))
        groups = {}
        for term in terms:
            if term.coefficient == 0.0:
                continue
            boson_key = term.sector_factors(Sector.BOSON)
            f_op, b_op = _split_term(term, basis)
            if b_op is None:
                self.fermion_part = self.fermion_part + term.coefficient * (f_op if f_op is not None else sps.identity(n_f))
            elif f_op is None:
                self.boson_part = self.boson_part + term.coefficient * b_op
            elif boson_key in groups:
                groups[boson_key][0] = groups[boson_key][0] + term.coefficient * f_op
            else:
                groups[boson_key] = [term.coefficient * f_op, b_op]
        self.mixed = [(sps.csr_matrix(f), sps.csr_matrix(b)) for f, b in groups.values()]
        self.fermion_part = sps.csr_matrix(self.fermion_part)
        self.boson_part = sps.csr_matrix(self.boson_part)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def matvec(self, x: np.ndarray) -> np.ndarray:
        psi = np.asarray(x, dtype=float).reshape(self.basis.shape)
        out = self.fermion_part @ psi
        out += (self.boson_part @ psi.T).T
        for f_op, b_op in self.mixed:
            out += (b_op @ (f_op @ psi).T).T
        return np.asarray(out).reshape(-1)

    def to_sparse(self) -> sps.csr_matrix:
        n_f, n_b = self.basis.shape
        total = sps.kron(self.fermion_part, sps.identity(n_b)) + sps.kron(sps.identity(n_f), self.boson_part)
        for f_op, b_op in self.mixed:
            total = total + sps.kron(f_op, b_op)
        return sps.csr_matrix(total)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


@lru_cache(maxsize=16)
def excitation_operators(n_particles: int, statistics: Statistics) -> tuple:
    """
    All ``c†_l c_k`` of a sector as sparse matrices on its full Fock basis,
    ordered by ``l * r + k``.
    """
    full = sector_basis(n_particles, "full")
    r = full.n_modes
    sector = Sector.FERMION if statistics is Statistics.FERMION else Sector.BOSON
    return tuple(
        sector_operator((create(sector, l), annihilate(sector, k)), full, statistics=statistics)
        for l in range(r)
        for k in range(r)
    )
