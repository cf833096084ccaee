"""
Oracle checks: the three solve paths against each other, the two particle-hole
constructions against each other, and the physical invariants of every RDM,
for all N up to a small maximum over a fixed parameter battery.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import OccupationState, Sector, Statistics, composite_basis
from .errors import IntegrityError, MPWError, UsageError
from .model import build_model
from .mpw_config import SolveOptions, SystemParams
from .secondq_ops import CompiledHamiltonian, ExcitationOp, apply_excitation
from .solvers import get_path
from .witness import (
    check_one_particle_rdm,
    largest_eigenvalue,
    one_particle_rdm,
    pairing_limit,
    particle_hole_rdm,
    particle_hole_rdm_subtracted,
    reduce_sector,
    theoretical_bound,
)

logger = logging.getLogger(__name__)

MAX_VALIDATION_N = 4
PATH_TOL = 1e-8
CONSTRUCTION_TOL = 1e-10
SYMMETRY_TOL = 1e-12
SPECTRUM_TOL = 1e-9
PSD_TOL = 1e-9
PAIRING_LIMIT_TOL = 1e-2
STRONG_V = -50.0
BATTERIES = ("default", "random", "strong")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = ""):
        self.checks.append(CheckResult(name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list:
        return [check for check in self.checks if not check.passed]


def parameter_battery(n: int, battery: str = "default", seed: int = 1234, size: int = 20) -> list:
    """Balanced (n, n) systems; the random part is reproducible from ``seed``."""
    if battery not in BATTERIES:
        raise UsageError(f"unknown battery {battery!r}, expected one of {BATTERIES}")
    points = []
    if battery in ("default", "strong"):
        points += [
            SystemParams(n, n, 1.0, 1.0, 0.0, 0.0, 0.0),
            SystemParams(n, n, 1.0, 1.0, -0.4, -2.0, 0.0),
            SystemParams(n, n, 5.0, 5.0, -0.4, -2.0, 0.5),
            SystemParams(n, n, 3.0, 0.3, -0.8, -0.08, 1.0),
        ]
    rng = np.random.default_rng(seed + n)
    n_random = size if battery == "random" else 4
    for _ in range(n_random):
        eps_f, eps_b = rng.uniform(0.5, 3.0, size=2)
        v_f, v_b = rng.uniform(-2.0, 0.5, size=2)
        points.append(SystemParams(n, n, eps_f, eps_b, v_f, v_b, rng.uniform(0.0, 1.0)))
    if battery == "strong":
        points += [
            SystemParams(n, n, 1.0, 1.0, STRONG_V, STRONG_V, 0.0),
            SystemParams(n, 0, 1.0, 1.0, STRONG_V, 0.0, 0.0),
            SystemParams(0, n, 1.0, 1.0, 0.0, STRONG_V, 0.0),
        ]
    return points


def _label(params: SystemParams) -> str:
    return (
        f"N=({params.n_f},{params.n_b}) eps=({params.eps_f:.3g},{params.eps_b:.3g}) "
        f"V=({params.v_f:.3g},{params.v_b:.3g}) mu={params.mu:.3g}"
    )


def check_statistics_discrimination(report: ValidationReport):
    """f†_2 f_0 on {0, 1} gives -1 for fermions and +1 for hard-core bosons."""
    state = OccupationState.from_modes([0, 1])
    target = OccupationState.from_modes([1, 2])
    f_state, f_sign = apply_excitation(ExcitationOp(2, 0, Statistics.FERMION), state)
    b_state, b_sign = apply_excitation(ExcitationOp(2, 0, Statistics.HARDCORE_BOSON), state)
    passed = f_state == target and b_state == target and f_sign == -1 and b_sign == 1
    report.add("statistics-discrimination", passed, "" if passed else f"fermion sign {f_sign}, boson sign {b_sign}")


def _sector_values(ground, params: SystemParams, opts: SolveOptions) -> dict:
    values = {"energy": ground.energy}
    for sector in Sector:
        n = params.n_particles(sector)
        if n == 0:
            values[sector] = None
            continue
        reduction = reduce_sector(ground.vector, sector)
        D = one_particle_rdm(reduction, sector)
        G = particle_hole_rdm(reduction, sector, D, memory_budget=opts.memory_budget)
        values[sector] = (reduction, D, G, largest_eigenvalue(G))
    return values


def check_point(params: SystemParams, opts: SolveOptions, report: ValidationReport, strong: bool = False):
    label = _label(params)
    model = build_model(params)

    full_basis = composite_basis(params.n_f, params.n_b, "full")
    dense_h = CompiledHamiltonian(model.all_terms, full_basis).to_dense()
    asymmetry = float(np.max(np.abs(dense_h - dense_h.T)))
    report.add(f"hamiltonian-symmetry [{label}]", asymmetry <= SYMMETRY_TOL, f"max |H - H^T| = {asymmetry:.3e}")

    # V_f and V_b flipped together
    flipped = build_model(params.replace(v_f=-params.v_f, v_b=-params.v_b))
    flipped_h = CompiledHamiltonian(flipped.all_terms, full_basis).to_dense()
    shift = float(np.max(np.abs(np.linalg.eigvalsh(dense_h) - np.linalg.eigvalsh(flipped_h))))
    report.add(f"coupling-sign [{label}]", shift <= SPECTRUM_TOL, f"max spectral shift {shift:.3e}")

    try:
        CompiledHamiltonian(model.all_terms, composite_basis(params.n_f, params.n_b, "column"))
        report.add(f"subspace-closure [{label}]", True)
    except IntegrityError as exc:
        report.add(f"subspace-closure [{label}]", False, str(exc))

    results = {}
    for path in ("full", "column", "collective"):
        path_opts = opts.replace(solver=path)
        build_basis, solve = get_path(path)
        ground = solve(model, build_basis(params), path_opts)
        results[path] = _sector_values(ground, params, path_opts)

    reference = results["full"]
    for path in ("column", "collective"):
        diffs = [abs(results[path]["energy"] - reference["energy"])]
        for sector in Sector:
            if reference[sector] is not None:
                diffs.append(abs(results[path][sector][3] - reference[sector][3]))
        worst = max(diffs)
        report.add(f"path-equivalence full/{path} [{label}]", worst <= PATH_TOL, f"max deviation {worst:.3e}")

    for sector in Sector:
        if reference[sector] is None:
            continue
        n = params.n_particles(sector)
        reduction, D, G, lam = results["column"][sector]
        tag = f"{sector.value} [{label}]"
        subtracted = particle_hole_rdm_subtracted(reduction, sector, D, memory_budget=opts.memory_budget)
        gap = float(np.max(np.abs(G.matrix - subtracted.matrix)))
        report.add(f"centered-vs-subtracted {tag}", gap <= CONSTRUCTION_TOL, f"max |dG| = {gap:.3e}")
        failures = check_one_particle_rdm(D, n)
        report.add(f"one-particle-rdm {tag}", not failures, "; ".join(failures))
        low = float(G.eigenvalues()[0])
        report.add(f"psd {tag}", low >= -PSD_TOL, f"min eigenvalue {low:.3e}")
        ceiling = max(1.0, theoretical_bound(n, 2 * n))
        report.add(f"bound {tag}", lam <= ceiling + 1e-6, f"lambda_G = {lam:.12g}, ceiling {ceiling:.12g}")
        strong_sector = strong and params.mu == 0.0 and (params.v_f if sector is Sector.FERMION else params.v_b) == STRONG_V
        if strong_sector:
            limit = pairing_limit(n)
            report.add(
                f"pairing-limit {tag}",
                abs(lam - limit) <= PAIRING_LIMIT_TOL,
                f"lambda_G = {lam:.6g}, strong-pairing limit {limit:.6g}",
            )


def check_sector_exchange(params: SystemParams, opts: SolveOptions, report: ValidationReport):
    """Swapping the sector couplings swaps the witnesses and keeps the energy."""
    swapped = SystemParams(params.n_b, params.n_f, params.eps_b, params.eps_f, params.v_b, params.v_f, params.mu)
    values = []
    for p in (params, swapped):
        path_opts = opts.replace(solver="column")
        build_basis, solve = get_path("column")
        ground = solve(build_model(p), build_basis(p), path_opts)
        values.append(_sector_values(ground, p, path_opts))
    a, b = values
    diffs = [abs(a["energy"] - b["energy"])]
    for sector, other in ((Sector.FERMION, Sector.BOSON), (Sector.BOSON, Sector.FERMION)):
        if a[sector] is not None:
            diffs.append(abs(a[sector][3] - b[other][3]))
    worst = max(diffs)
    report.add(f"sector-exchange [{_label(params)}]", worst <= PATH_TOL, f"max deviation {worst:.3e}")


def run_validation(max_n: int = 3, battery: str = "default", opts: SolveOptions = None) -> ValidationReport:
    if not 1 <= max_n <= MAX_VALIDATION_N:
        raise UsageError(f"max_n must be in 1..{MAX_VALIDATION_N} (full-space oracle cost), got {max_n}")
    opts = opts or SolveOptions()
    report = ValidationReport()
    check_statistics_discrimination(report)
    for n in range(1, max_n + 1):
        points = parameter_battery(n, battery, seed=opts.seed)
        logger.info(f"validating N = {n}: {len(points)} parameter points")
        for params in points:
            try:
                check_point(params, opts, report, strong=battery == "strong")
                check_sector_exchange(params, opts, report)
            except MPWError as exc:
                report.add(f"evaluation [{_label(params)}]", False, f"{type(exc).__name__}: {exc}")
    return report
