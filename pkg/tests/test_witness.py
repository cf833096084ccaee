import numpy as np
import pytest

from mpw.basis import Sector, composite_basis
from mpw.errors import IntegrityError, NormalizationError, ParameterError
from mpw.mpw_config import SolveOptions, SystemParams
from mpw.secondq_ops import StateVector
from mpw.solvers import solver_basis_map, solver_run_map
from mpw.model import build_model
from mpw.witness import (
    check_one_particle_rdm,
    compute_witness,
    dominant_mode,
    largest_eigenvalue,
    one_particle_rdm,
    pairing_limit,
    particle_hole_rdm,
    particle_hole_rdm_subtracted,
    reduce_sector,
    theoretical_bound,
)

from .conftest import random_params


def _ground(params, solver="column"):
    opts = SolveOptions(solver=solver)
    return solver_run_map[solver](build_model(params), solver_basis_map[solver](params), opts)


@pytest.mark.parametrize("n, r, expected", [(6, 12, 3.0), (4, 8, 2.0), (2, 2, 0.0), (1, 2, 0.5)])
def test_theoretical_bound(n, r, expected):
    assert theoretical_bound(n, r) == expected


@pytest.mark.parametrize("n, r", [(7, 6), (0, 4)])
def test_theoretical_bound_rejects(n, r):
    with pytest.raises(ParameterError):
        theoretical_bound(n, r)


def test_largest_eigenvalue_edge_cases():
    assert largest_eigenvalue(np.zeros((4, 4))) == 0.0
    assert largest_eigenvalue(np.zeros((0, 0))) == 0.0
    with pytest.raises(IntegrityError):
        largest_eigenvalue(-np.eye(3))
    with pytest.raises(IntegrityError):
        largest_eigenvalue(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_product_state_witness(product_params):
    result = compute_witness(product_params)
    assert result.lambda_g_f == pytest.approx(1.0, abs=1e-8)
    assert result.lambda_g_b == pytest.approx(1.0, abs=1e-8)
    assert not result.above_baseline_f and not result.saturated_b
    assert result.converged


def test_noninteracting_one_particle_rdm():
    ground = _ground(SystemParams(3, 3, eps_f=1.0, eps_b=2.0))
    for sector in Sector:
        D = one_particle_rdm(ground.vector, sector)
        np.testing.assert_allclose(D.matrix, np.diag([1, 1, 1, 0, 0, 0]), atol=1e-12)
        assert check_one_particle_rdm(D, 3) == []


def test_noninteracting_particle_hole_structure():
    ground = _ground(SystemParams(2, 2))
    D = one_particle_rdm(ground.vector, Sector.FERMION)
    G = particle_hole_rdm(ground.vector, Sector.FERMION, D)
    occupation = np.diag(D.matrix)
    r = 4
    expected = np.zeros((r * r, r * r))
    for i in range(r):
        for j in range(r):
            expected[i * r + j, i * r + j] = occupation[j] * (1 - occupation[i])
    np.testing.assert_allclose(G.matrix, expected, atol=1e-12)
    np.testing.assert_allclose(sorted(set(np.round(G.eigenvalues(), 10))), [0.0, 1.0])


def test_strong_pairing_lower_occupations_equal():
    ground = _ground(SystemParams(2, 0, eps_f=1.0, v_f=-50.0))
    D = one_particle_rdm(ground.vector, Sector.FERMION)
    diagonal = np.diag(D.matrix)
    assert diagonal[0] == pytest.approx(diagonal[1], abs=1e-12)
    assert D.trace == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("n, expected", [(1, 1.0), (2, 1.0), (4, 1 + np.sqrt(3) / 2), (6, 2.891412)])
def test_pairing_limit(n, expected):
    assert pairing_limit(n) == pytest.approx(expected, abs=1e-5)


def test_pairing_limit_below_bound_beyond_two_pairs():
    values = [pairing_limit(n) for n in range(3, 7)]
    assert all(1.0 < value < n / 2 for n, value in zip(range(3, 7), values))
    assert values == sorted(values)
    assert pairing_limit(0) == 0.0
    with pytest.raises(ParameterError):
        pairing_limit(-1)


@pytest.mark.parametrize("n, expected", [(2, 1.0), (3, 1.431452), (4, 1.865920), (5, 2.413965), (6, 2.891341)])
def test_strong_pairing_plateau(n, expected):
    result = compute_witness(SystemParams(n, 0, eps_f=1.0, v_f=-50.0))
    assert result.lambda_g_f == pytest.approx(expected, abs=1e-5)
    assert result.lambda_g_f == pytest.approx(pairing_limit(n), abs=1e-2)
    assert result.lambda_g_b == 0.0 and result.bound_b == 0.0
    assert result.saturated_f == (n > 2)
    assert result.above_baseline_f == (n > 2)


def test_boson_one_particle_rdm_never_condenses():
    result = compute_witness(SystemParams(0, 4, eps_b=1.0, v_b=-50.0))
    assert result.diagnostics.lambda_d_b <= 1 + 1e-10
    assert result.lambda_g_b > 1.5


@pytest.mark.parametrize("n", [1, 2, 3])
def test_centered_matches_subtracted(rng, n):
    ground = _ground(random_params(rng, n))
    for sector in Sector:
        D = one_particle_rdm(ground.vector, sector)
        centered = particle_hole_rdm(ground.vector, sector, D)
        subtracted = particle_hole_rdm_subtracted(ground.vector, sector, D)
        np.testing.assert_allclose(centered.matrix, subtracted.matrix, atol=1e-10)
        assert centered.eigenvalues()[0] >= -1e-9


def test_streamed_particle_hole_matches(coupled_params):
    ground = _ground(coupled_params)
    reduction = reduce_sector(ground.vector, Sector.BOSON)
    D = one_particle_rdm(reduction, Sector.BOSON)
    whole = particle_hole_rdm(reduction, Sector.BOSON, D)
    streamed = particle_hole_rdm(reduction, Sector.BOSON, D, memory_budget=1)
    np.testing.assert_allclose(streamed.matrix, whole.matrix, atol=1e-12)


def test_particle_hole_symmetry(coupled_params):
    ground = _ground(coupled_params)
    D = one_particle_rdm(ground.vector, Sector.FERMION)
    G = particle_hole_rdm(ground.vector, Sector.FERMION, D)
    np.testing.assert_allclose(G.matrix, G.matrix.T, atol=1e-12)
    assert G.element(0, 2, 0, 2) == pytest.approx(G.matrix[2, 2])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_solve_paths_agree(rng, n):
    params = random_params(rng, n)
    results = {path: compute_witness(params, SolveOptions(solver=path)) for path in ("full", "column", "collective")}
    reference = results["full"]
    for path in ("column", "collective"):
        assert results[path].energy == pytest.approx(reference.energy, abs=1e-8)
        assert results[path].lambda_g_f == pytest.approx(reference.lambda_g_f, abs=1e-8)
        assert results[path].lambda_g_b == pytest.approx(reference.lambda_g_b, abs=1e-8)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("solver", ["full", "column"])
def test_uncoupled_sectors_match_single_sector_witness(n, solver):
    opts = SolveOptions(solver=solver)
    mixed = compute_witness(SystemParams(n, n, 1.4, 0.8, -0.9, -0.5, 0.0), opts)
    fermion_only = compute_witness(SystemParams(n, 0, eps_f=1.4, v_f=-0.9), opts)
    boson_only = compute_witness(SystemParams(0, n, eps_b=0.8, v_b=-0.5), opts)
    assert mixed.energy == pytest.approx(fermion_only.energy + boson_only.energy, abs=1e-10)
    assert mixed.lambda_g_f == pytest.approx(fermion_only.lambda_g_f, abs=1e-10)
    assert mixed.lambda_g_b == pytest.approx(boson_only.lambda_g_b, abs=1e-10)


def test_sector_exchange(coupled_params):
    p = coupled_params
    swapped = SystemParams(p.n_b, p.n_f, p.eps_b, p.eps_f, p.v_b, p.v_f, p.mu)
    a, b = compute_witness(p), compute_witness(swapped)
    assert a.energy == pytest.approx(b.energy, abs=1e-10)
    assert a.lambda_g_f == pytest.approx(b.lambda_g_b, abs=1e-8)
    assert a.lambda_g_b == pytest.approx(b.lambda_g_f, abs=1e-8)


def test_unnormalized_state_rejected():
    basis = composite_basis(1, 1, "column")
    psi = StateVector(np.full(basis.dimension, 1.0), basis)
    with pytest.raises(NormalizationError):
        one_particle_rdm(psi, Sector.FERMION)


def test_one_particle_rdm_checks_flag_bad_trace():
    ground = _ground(SystemParams(2, 2))
    D = one_particle_rdm(ground.vector, Sector.FERMION)
    assert check_one_particle_rdm(D, 3)


def test_dominant_mode():
    ground = _ground(SystemParams(4, 0, eps_f=1.0, v_f=-50.0))
    D = one_particle_rdm(ground.vector, Sector.FERMION)
    mode = dominant_mode(particle_hole_rdm(ground.vector, Sector.FERMION, D))
    assert mode.shape == (8, 8)
    assert np.linalg.norm(mode) == pytest.approx(1.0)
    assert mode.flat[np.argmax(np.abs(mode))] > 0
    # lower <-> upper excitations within a column dominate
    weight = sum(mode[i + 4, i] ** 2 + mode[i, i + 4] ** 2 for i in range(4))
    assert weight > 0.5


def test_validated_regime_flag():
    params = SystemParams(4, 4, 1.0, 1.0, -0.3, -0.3, 0.2)
    assert compute_witness(params).diagnostics.outside_validated_regime
    assert not compute_witness(params.replace(n_f=3, n_b=3)).diagnostics.outside_validated_regime
    assert not compute_witness(params.replace(n_f=2, n_b=2), SolveOptions(solver="full")).diagnostics.outside_validated_regime


def test_witness_dict_carries_flags(coupled_params):
    payload = compute_witness(coupled_params).to_dict()
    assert {"lambda_g_f", "lambda_g_b", "bound_f", "bound_b", "energy", "saturated_b", "diagnostics"} <= set(payload)
    assert payload["diagnostics"]["path"] == "column"
