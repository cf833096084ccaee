"""
Parameter grids over compute_witness.

Grid points are independent jobs. They are evaluated in a ``spawn`` process
pool with BLAS pinned to one thread per worker, collected in grid order
(outer axis slow, inner fast) and written as CSV or JSON lines next to a
``<out>.meta.json`` sidecar that describes the sweep. Re-running a sweep
whose sidecar matches recomputes only missing (and, on request, failed)
rows.
"""
import csv
import dataclasses
import hashlib
import io
import itertools
import json
import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from .basis import Sector
from .errors import MPWError, ParameterError, SweepIOError, UsageError
from .mpw_config import SolveOptions, SystemParams, canonical_key
from .utils import format_float, single_threaded_blas, worker_count
from .witness import ONSET_LEVEL, SATURATION_TOL, compute_witness, pairing_limit

logger = logging.getLogger(__name__)

AXIS_NAMES = ("v_f", "v_b", "mu", "eps_f", "eps_b")
PARAM_COLUMNS = ("n_f", "n_b", "eps_f", "eps_b", "v_f", "v_b", "mu")
RESULT_COLUMNS = ("energy", "lambda_g_f", "lambda_g_b", "bound_f", "bound_b", "converged", "iterations", "wall_time_ms")
CSV_HEADER = PARAM_COLUMNS + RESULT_COLUMNS
GRID_EPS = 1e-9
MIN_STEP = 1e-10


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        object.__setattr__(self, "name", canonical_key(self.name))
        if self.name not in AXIS_NAMES:
            raise ParameterError(f"cannot sweep {self.name!r}, expected one of {AXIS_NAMES}")
        for name in ("start", "stop", "step"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"axis {self.name}: {name} must be finite")
            object.__setattr__(self, name, value)
        # values are rounded to 12 decimals
        if not self.step >= MIN_STEP:
            raise ParameterError(f"axis {self.name}: step must be >= {MIN_STEP:g}, got {self.step:g}")
        if self.stop < self.start:
            raise ParameterError(f"axis {self.name}: stop {self.stop} < start {self.start}")

    @classmethod
    def parse(cls, token: str) -> "Axis":
        """``"mu=0:1:0.02"`` -> Axis("mu", 0, 1, 0.02); malformed tokens raise UsageError."""
        token = str(token).strip()
        name, sep, bounds = token.partition("=")
        parts = bounds.split(":")
        if not sep or not name or len(parts) != 3:
            raise UsageError(f"malformed axis {token!r}, expected NAME=START:STOP:STEP")
        try:
            return cls(name, *(float(p) for p in parts))
        except ValueError as exc:
            raise UsageError(f"malformed axis {token!r}: {exc}") from None

    @property
    def count(self) -> int:
        return int(math.floor((self.stop - self.start) / self.step + GRID_EPS)) + 1

    @property
    def values(self) -> tuple:
        # start + k*step, never accumulated
        return tuple(round(self.start + k * self.step, 12) + 0.0 for k in range(self.count))

    def __str__(self) -> str:
        return f"{self.name}={format_float(self.start)}:{format_float(self.stop)}:{format_float(self.step)}"


def parse_axes(tokens) -> tuple:
    if tokens is None:
        return ()
    if isinstance(tokens, str):
        tokens = [tokens]
    return tuple(token if isinstance(token, Axis) else Axis.parse(token) for token in tokens)


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    axes: tuple
    options: SolveOptions = field(default_factory=SolveOptions)
    output: str = None
    workers: int = None
    use_tqdm: bool = False
    record_timing: bool = False
    retry_failed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axes", parse_axes(self.axes))
        if not 1 <= len(self.axes) <= 2:
            raise ParameterError(f"a sweep needs one or two axes, got {len(self.axes)}")
        names = [axis.name for axis in self.axes]
        if len(set(names)) != len(names):
            raise ParameterError(f"sweep axes must be distinct, got {names}")
        if "mu" in names and self.base.n_f != self.base.n_b:
            raise ParameterError(f"a mu axis needs n_f == n_b, got {self.base.n_f} and {self.base.n_b}")

    def grid(self) -> list:
        """``[(key, params)]`` in row order; ``key`` holds the axis values."""
        names = [axis.name for axis in self.axes]
        points = []
        for values in itertools.product(*(axis.values for axis in self.axes)):
            points.append((values, self.base.replace(**dict(zip(names, values)))))
        return points

    def describe(self) -> dict:
        options = dataclasses.asdict(self.options)
        options.pop("use_tqdm")
        return {
            "base": dataclasses.asdict(self.base),
            "axes": [str(axis) for axis in self.axes],
            "options": options,
        }

    def fingerprint(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class SweepRow:
    n_f: int
    n_b: int
    eps_f: float
    eps_b: float
    v_f: float
    v_b: float
    mu: float
    energy: float = math.nan
    lambda_g_f: float = math.nan
    lambda_g_b: float = math.nan
    bound_f: float = math.nan
    bound_b: float = math.nan
    converged: bool = False
    iterations: int = 0
    wall_time_ms: float = 0.0

    @classmethod
    def failed(cls, params: SystemParams) -> "SweepRow":
        return cls(**dataclasses.asdict(params))

    @classmethod
    def from_record(cls, record: dict) -> "SweepRow":
        kwargs = {}
        for f in dataclasses.fields(cls):
            raw = record[f.name]
            if f.type in (bool, "bool"):
                kwargs[f.name] = raw if isinstance(raw, bool) else str(raw).strip().lower() == "true"
            elif f.type in (int, "int"):
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = float(raw)
        return cls(**kwargs)

    @property
    def params(self) -> SystemParams:
        return SystemParams(**{name: getattr(self, name) for name in PARAM_COLUMNS})

    def formatted(self) -> list:
        return [format_float(getattr(self, name)) for name in CSV_HEADER]

    def record(self) -> dict:
        out = {}
        for name in CSV_HEADER:
            value = getattr(self, name)
            out[name] = None if isinstance(value, float) and math.isnan(value) else value
        return out

    def key(self, axes) -> tuple:
        return tuple(format_float(getattr(self, axis.name)) for axis in axes)


def evaluate_point(params: SystemParams, options: SolveOptions, record_timing: bool = False) -> SweepRow:
    """One grid point; failures come back as a row with converged = false."""
    start = time.perf_counter()
    try:
        result = compute_witness(params, options)
    except (MPWError, np.linalg.LinAlgError) as exc:
        logger.warning(f"grid point {params} failed: {type(exc).__name__}: {exc}")
        row = SweepRow.failed(params)
    except Exception:
        # keeps the rest of the grid
        logger.exception(f"grid point {params} raised unexpectedly")
        row = SweepRow.failed(params)
    else:
        row = SweepRow(
            **dataclasses.asdict(params),
            energy=result.energy,
            lambda_g_f=result.lambda_g_f,
            lambda_g_b=result.lambda_g_b,
            bound_f=result.bound_f,
            bound_b=result.bound_b,
            converged=result.converged,
            iterations=result.diagnostics.iterations,
        )
    if record_timing:
        row.wall_time_ms = (time.perf_counter() - start) * 1000.0
    return row


def _evaluate_job(job) -> SweepRow:
    params, options, record_timing = job
    return evaluate_point(params, options, record_timing)


def output_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".jsonl":
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise UsageError(f"output {path} must end in .csv or .jsonl")


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def render_rows(rows, fmt: str = "csv") -> str:
    buffer = io.StringIO()
    if fmt == "jsonl":
        for row in rows:
            buffer.write(json.dumps(row.record()) + "\n")
        return buffer.getvalue()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.formatted())
    return buffer.getvalue()


def read_rows(path) -> list:
    path = Path(path)
    text = path.read_text()
    if output_format(path) == "jsonl":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        records = [{k: (math.nan if v is None else v) for k, v in r.items()} for r in records]
    else:
        records = list(csv.DictReader(io.StringIO(text)))
    return [SweepRow.from_record(record) for record in records]


def sweep_metadata(spec: SweepSpec) -> dict:
    from . import __version__

    return {
        "version": __version__,
        "seed": spec.options.seed,
        "solver": spec.options.solver,
        "fingerprint": spec.fingerprint(),
        "spec": spec.describe(),
    }


def _resumable_rows(spec: SweepSpec) -> dict:
    if spec.output is None:
        return {}
    output, meta = Path(spec.output), metadata_path(spec.output)
    if not output.exists():
        return {}
    try:
        previous = json.loads(meta.read_text())
    except (OSError, ValueError):
        logger.warning(f"{output} exists without a readable {meta.name}; recomputing every grid point")
        return {}
    if previous.get("fingerprint") != spec.fingerprint():
        logger.warning(f"{meta.name} describes a different sweep; recomputing every grid point")
        return {}
    try:
        rows = read_rows(output)
    except (OSError, ValueError, KeyError, MPWError) as exc:
        logger.warning(f"cannot resume from {output}: {exc}")
        return {}
    done = {row.key(spec.axes): row for row in rows}
    if spec.retry_failed:
        done = {key: row for key, row in done.items() if row.converged}
    return done


def write_sweep(spec: SweepSpec, rows: list):
    path = Path(spec.output)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_rows(rows, output_format(path)))
        metadata_path(path).write_text(json.dumps(sweep_metadata(spec), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise SweepIOError(f"cannot write sweep output {path}: {exc}", rows=rows) from exc


def run_sweep(spec: SweepSpec) -> list:
    if spec.output is not None:
        output_format(spec.output)
    grid = spec.grid()
    done = _resumable_rows(spec)
    keys = [tuple(format_float(v) for v in key) for key, _ in grid]
    pending = [(i, params) for i, ((_, params), key) in enumerate(zip(grid, keys)) if key not in done]
    if done:
        logger.info(f"resuming sweep: {len(grid) - len(pending)}/{len(grid)} grid points already computed")

    jobs = [(params, spec.options, spec.record_timing) for _, params in pending]
    n_workers = min(worker_count(spec.workers), max(1, len(jobs)))
    progress = dict(total=len(jobs), desc="sweep", disable=not spec.use_tqdm)
    if n_workers == 1:
        results = list(tqdm(map(_evaluate_job, jobs), **progress))
    else:
        context = multiprocessing.get_context("spawn")
        # imap keeps submission order
        with single_threaded_blas(), context.Pool(processes=n_workers) as pool:
            results = list(tqdm(pool.imap(_evaluate_job, jobs, chunksize=1), **progress))
    computed = {i: row for (i, _), row in zip(pending, results)}

    rows = [computed[i] if i in computed else done[key] for i, key in enumerate(keys)]
    n_failed = sum(not row.converged for row in rows)
    logger.info(f"sweep finished: {len(rows)} rows, {len(jobs)} computed, {n_failed} not converged")
    if spec.output is not None:
        write_sweep(spec, rows)
    return rows


def onset_threshold(rows, sector, level: float):
    """Smallest mu whose converged row reaches ``lambda_G >= level`` in ``sector``; None if never."""
    rows = list(rows)
    if not rows:
        return None
    for name in PARAM_COLUMNS:
        if name != "mu" and len({getattr(row, name) for row in rows}) > 1:
            raise ParameterError(f"onset_threshold needs a sweep over mu only, but {name} varies")
    attribute = "lambda_g_f" if Sector(sector) is Sector.FERMION else "lambda_g_b"
    for row in sorted(rows, key=lambda r: r.mu):
        if row.converged and getattr(row, attribute) >= level:
            return row.mu
    return None


def onset_report(rows) -> dict:
    """
    Per-sector onsets along mu: long-range order (``lambda_G >= 1.5``) and
    saturation (within 0.05 of the strong-pairing limit, for N >= 3).
    """
    rows = list(rows)
    report = {}
    for sector in Sector:
        counts = [row.n_f if sector is Sector.FERMION else row.n_b for row in rows if row.converged]
        if not counts or max(counts) == 0:
            continue
        levels = [("long-range order", ONSET_LEVEL)]
        limit = pairing_limit(max(counts))
        if limit > 1.0 + SATURATION_TOL:
            levels.append(("saturation", limit - SATURATION_TOL))
        report[sector.value] = [(label, level, onset_threshold(rows, sector, level)) for label, level in levels]
    return report
