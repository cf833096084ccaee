"""
Occupation-number bases for the two particle sectors.

Each sector owns ``r = 2N`` modes. Inside a sector, local mode ``p`` (0-based)
for ``p < N`` is the lower level of column ``p`` and ``p + N`` the upper
level. Bit ``m`` of a state's bit string is local mode ``m``, so bit 0 is the
least significant bit and states are ordered by ascending integer value.

Globally (``ModeLayout``) fermion modes come first, ``0 .. 2n_f - 1``, then
boson modes ``2n_f .. 2n_f + 2n_b - 1``; the lower boson level precedes the
upper one.
"""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import comb

import numpy as np

from .errors import NormalizationError, ParameterError

logger = logging.getLogger(__name__)


class Restriction(str, Enum):
    FULL = "full"
    COLUMN = "column"


class Statistics(str, Enum):
    FERMION = "fermion"
    HARDCORE_BOSON = "hardcore_boson"


class Sector(str, Enum):
    FERMION = "fermion"
    BOSON = "boson"

    @property
    def statistics(self) -> Statistics:
        return Statistics.FERMION if self is Sector.FERMION else Statistics.HARDCORE_BOSON


@dataclass(frozen=True)
class ModeLayout:
    n_f: int
    n_b: int

    def __post_init__(self):
        if self.n_f < 0 or self.n_b < 0:
            raise ParameterError(f"pair counts must be >= 0, got n_f={self.n_f}, n_b={self.n_b}")

    def n_particles(self, sector: Sector) -> int:
        return self.n_f if sector is Sector.FERMION else self.n_b

    def n_modes(self, sector: Sector) -> int:
        return 2 * self.n_particles(sector)

    @property
    def fermion_modes(self) -> range:
        return range(0, 2 * self.n_f)

    @property
    def boson_modes(self) -> range:
        return range(2 * self.n_f, 2 * self.n_f + 2 * self.n_b)

    def global_mode(self, sector: Sector, local: int) -> int:
        if not 0 <= local < self.n_modes(sector):
            raise ParameterError(f"{sector.value} mode {local} outside 0..{self.n_modes(sector) - 1}")
        return local if sector is Sector.FERMION else 2 * self.n_f + local

    def local_mode(self, mode: int) -> tuple:
        if mode in self.fermion_modes:
            return Sector.FERMION, mode
        if mode in self.boson_modes:
            return Sector.BOSON, mode - 2 * self.n_f
        raise ParameterError(f"mode {mode} outside the layout (0..{2 * self.n_f + 2 * self.n_b - 1})")


@dataclass(frozen=True)
class OccupationState:
    bits: int

    @property
    def population(self) -> int:
        return self.bits.bit_count()

    def occupied(self) -> tuple:
        return tuple(m for m in range(self.bits.bit_length()) if self.bits >> m & 1)

    @classmethod
    def from_modes(cls, modes) -> "OccupationState":
        bits = 0
        for m in modes:
            bits |= 1 << m
        return cls(bits)


class SectorBasis:
    """Ordered occupation basis of one sector; immutable after construction."""

    def __init__(self, states: np.ndarray, n_modes: int, n_particles: int, restriction: Restriction):
        self._states = np.asarray(states, dtype=np.uint64)
        self._states.setflags(write=False)
        self.n_modes = n_modes
        self.n_particles = n_particles
        self.restriction = Restriction(restriction)
        self._rank_map = {int(s): k for k, s in enumerate(self._states)}

    @property
    def states(self) -> np.ndarray:
        return self._states

    def __len__(self) -> int:
        return len(self._states)

    def __repr__(self) -> str:
        return (
            f"SectorBasis(n_modes={self.n_modes}, n_particles={self.n_particles}, "
            f"restriction={self.restriction.value}, dim={len(self)})"
        )

    def state(self, index: int) -> OccupationState:
        return OccupationState(int(self._states[index]))

    def rank(self, state) -> int:
        bits = state.bits if isinstance(state, OccupationState) else int(state)
        try:
            return self._rank_map[bits]
        except KeyError:
            raise ParameterError(f"state {bits:#b} is not a member of {self!r}") from None

    def ranks(self, bits: np.ndarray) -> tuple:
        """Vectorized rank lookup; returns ``(ranks, found)``."""
        bits = np.asarray(bits, dtype=np.uint64)
        if len(self._states) == 0:
            return np.zeros(bits.shape, dtype=np.int64), np.zeros(bits.shape, dtype=bool)
        idx = np.searchsorted(self._states, bits)
        idx = np.minimum(idx, len(self._states) - 1)
        found = self._states[idx] == bits
        return idx.astype(np.int64), found

    def excitation_counts(self) -> np.ndarray:
        """Number of particles in the upper level of each state."""
        half = self.n_modes // 2
        return np.bitwise_count(self._states >> np.uint64(half)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class CompositeBasis:
    fermion: SectorBasis
    boson: SectorBasis

    @property
    def dimension(self) -> int:
        return len(self.fermion) * len(self.boson)

    @property
    def shape(self) -> tuple:
        return len(self.fermion), len(self.boson)

    def sector(self, sector: Sector) -> SectorBasis:
        return self.fermion if sector is Sector.FERMION else self.boson

    def index(self, fermion_rank: int, boson_rank: int) -> int:
        return fermion_rank * len(self.boson) + boson_rank

    def split(self, index: int) -> tuple:
        if not 0 <= index < self.dimension:
            raise ParameterError(f"composite index {index} outside 0..{self.dimension - 1}")
        return divmod(index, len(self.boson))


def enumerate_sector(n_modes: int, n_particles: int, restriction="full") -> SectorBasis:
    restriction = Restriction(restriction)
    if not 0 <= n_particles <= n_modes:
        raise ParameterError(f"need 0 <= n_particles <= n_modes, got {n_particles} particles in {n_modes} modes")
    if restriction is Restriction.COLUMN:
        if n_modes != 2 * n_particles:
            raise ParameterError(f"column restriction needs n_modes == 2 * n_particles, got {n_modes}, {n_particles}")
        n = n_particles
        # one particle per column: bit p (lower) or bit p + n (upper)
        states = [
            sum(1 << (p + n * upper) for p, upper in enumerate(choice))
            for choice in itertools.product((0, 1), repeat=n)
        ]
    else:
        states = [sum(1 << m for m in modes) for modes in itertools.combinations(range(n_modes), n_particles)]
    states = np.array(sorted(states), dtype=np.uint64)
    return SectorBasis(states, n_modes, n_particles, restriction)


@lru_cache(maxsize=64)
def sector_basis(n_particles: int, restriction="full") -> SectorBasis:
    """Cached two-level sector basis (``2 * n_particles`` modes)."""
    return enumerate_sector(2 * n_particles, n_particles, restriction)


def composite_basis(n_f: int, n_b: int, restriction="column") -> CompositeBasis:
    return CompositeBasis(sector_basis(n_f, Restriction(restriction)), sector_basis(n_b, Restriction(restriction)))


def dicke_embedding(sector: SectorBasis) -> np.ndarray:
    """(dim, N+1) matrix whose column k is the normalized Dicke state with k excited columns."""
    if sector.restriction is not Restriction.COLUMN:
        raise ParameterError(f"Dicke expansion needs a column-restricted sector, got {sector!r}")
    n = sector.n_particles
    counts = sector.excitation_counts()
    embedding = np.zeros((len(sector), n + 1))
    norms = np.array([comb(n, k) for k in range(n + 1)], dtype=float)
    embedding[np.arange(len(sector)), counts] = 1.0 / np.sqrt(norms[counts])
    return embedding


def dicke_expand(collective_weights, sector: SectorBasis, atol: float = 1e-10) -> np.ndarray:
    weights = np.asarray(collective_weights, dtype=float)
    if weights.shape != (sector.n_particles + 1,):
        raise ParameterError(f"expected {sector.n_particles + 1} collective weights, got shape {weights.shape}")
    norm = float(weights @ weights)
    if abs(norm - 1.0) > atol:
        raise NormalizationError(f"collective weights must have unit norm, got |w|^2 = {norm:.3e}")
    return dicke_embedding(sector) @ weights
