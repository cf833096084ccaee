import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import ModeLayout, Sector
from .errors import ParameterError
from .mpw_config import SystemParams
from .secondq_ops import HamiltonianTerm, annihilate, create

logger = logging.getLogger(__name__)

TERM_GROUPS = ("fermion", "boson", "interaction")


def _emit(terms: list, coefficient: float, factors: tuple):
    if coefficient != 0.0:
        terms.append(HamiltonianTerm(coefficient, factors))


def _lmg_terms(sector: Sector, n: int, eps: float, v: float) -> list:
    """eps/2 (n_upper - n_lower) + V/2 sum_{p != q} c†_p c†_q c_{q+N} c_{p+N} + h.c."""
    terms = []
    for i in range(n):
        _emit(terms, -eps / 2, (create(sector, i), annihilate(sector, i)))
    for i in range(n, 2 * n):
        _emit(terms, eps / 2, (create(sector, i), annihilate(sector, i)))
    # p == q vanishes for fermions and for hard-core bosons alike
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            lowering = (create(sector, p), create(sector, q), annihilate(sector, q + n), annihilate(sector, p + n))
            _emit(terms, v / 2, lowering)
            _emit(terms, v / 2, tuple(f.adjoint() for f in reversed(lowering)))
    return terms


def build_fermion_terms(params: SystemParams) -> list:
    return _lmg_terms(Sector.FERMION, params.n_f, params.eps_f, params.v_f)


def build_boson_terms(params: SystemParams) -> list:
    return _lmg_terms(Sector.BOSON, params.n_b, params.eps_b, params.v_b)


def build_interaction_terms(params: SystemParams) -> list:
    """mu/2 sum_{p,q} f†_{p+N} f_p b†_q b_{q+N} + h.c. (boson modes sector-local)."""
    if params.mu == 0.0:
        return []
    if params.n_f != params.n_b:
        raise ParameterError(f"interaction needs n_f == n_b, got {params.n_f} and {params.n_b}")
    n = params.n_f
    terms = []
    for p in range(n):
        for q in range(n):
            factors = (
                create(Sector.FERMION, p + n),
                annihilate(Sector.FERMION, p),
                create(Sector.BOSON, q),
                annihilate(Sector.BOSON, q + n),
            )
            _emit(terms, params.mu / 2, factors)
            _emit(terms, params.mu / 2, tuple(f.adjoint() for f in reversed(factors)))
    return terms


@dataclass
class ModelInstance:
    params: SystemParams
    layout: ModeLayout
    terms: dict = field(default_factory=dict)

    @property
    def all_terms(self) -> list:
        return [term for group in TERM_GROUPS for term in self.terms.get(group, [])]


def build_model(params: SystemParams) -> ModelInstance:
    terms = {
        "fermion": build_fermion_terms(params),
        "boson": build_boson_terms(params),
        "interaction": build_interaction_terms(params),
    }
    logger.debug(f"model {params}: " + ", ".join(f"{k}={len(v)}" for k, v in terms.items()) + " terms")
    return ModelInstance(params, ModeLayout(params.n_f, params.n_b), terms)


def quasispin_operators(n: int) -> tuple:
    """(J+, Jz) for spin J = n/2 in the basis k = m + n/2 = 0..n."""
    k = np.arange(n + 1, dtype=float)
    j_plus = np.diag(np.sqrt((k[:-1] + 1) * (n - k[:-1])), -1) if n > 0 else np.zeros((1, 1))
    j_z = np.diag(k - n / 2)
    return j_plus, j_z


def collective_sector_hamiltonian(n: int, eps: float, v: float) -> np.ndarray:
    j_plus, j_z = quasispin_operators(n)
    j_minus = j_plus.T
    return eps * j_z + v / 2 * (j_plus @ j_plus + j_minus @ j_minus)


def build_collective_hamiltonian(params: SystemParams) -> np.ndarray:
    """Dense Hamiltonian on |k_f, k_b>, composite index k_f * (n_b + 1) + k_b."""
    h_f = collective_sector_hamiltonian(params.n_f, params.eps_f, params.v_f)
    h_b = collective_sector_hamiltonian(params.n_b, params.eps_b, params.v_b)
    eye_f, eye_b = np.eye(params.n_f + 1), np.eye(params.n_b + 1)
    h = np.kron(h_f, eye_b) + np.kron(eye_f, h_b)
    if params.mu != 0.0:
        jp_f, _ = quasispin_operators(params.n_f)
        jp_b, _ = quasispin_operators(params.n_b)
        exchange = np.kron(jp_f, jp_b.T)
        h += params.mu / 2 * (exchange + exchange.T)
    return h
