"""
Command-line entry point.

    mpw witness --nf 6 --nb 6 --eps-f 5 --eps-b 5 --vf -0.4 --vb -2.0 --mu 0.5
    mpw sweep --preset transfer-12 --out transfer12.csv
    mpw sweep --nf 4 --nb 4 --axis mu=0:1:0.02 --axis vf=-1:0:0.05 --out grid.csv
    mpw validate --max-n 3
    mpw bound 6 12

Exit codes: 0 success, 1 usage/parameter/integrity error, 2 non-convergence.
"""
import json as jsonlib
import logging
import os
import sys

import fire

from . import __version__
from .errors import MPWError, SweepIOError, UsageError
from .mpw_config import RunConfig
from .presets import get_preset
from .sweep_engine import SweepSpec, onset_report, parse_axes, render_rows, run_sweep
from .utils import format_float
from .validation import run_validation
from .witness import compute_witness, theoretical_bound

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def _header(config: RunConfig) -> str:
    return f"mpw {__version__}  seed={config.options.seed}  solver={config.options.solver}"


def _print_config(config: RunConfig):
    print(f"# mpw {__version__}")
    for line in config.to_lines():
        print(line)


def cmd_witness(config: RunConfig, as_json: bool = False) -> int:
    result = compute_witness(config.params, config.options)
    d = result.diagnostics
    if as_json:
        payload = result.to_dict()
        payload.update(version=__version__, seed=config.options.seed, solver=config.options.solver)
        print(jsonlib.dumps(payload, indent=2))
    else:
        p = result.params
        print(_header(config))
        print(
            f"system: n_f={p.n_f} n_b={p.n_b} eps_f={p.eps_f:g} eps_b={p.eps_b:g} "
            f"v_f={p.v_f:g} v_b={p.v_b:g} mu={p.mu:g}"
        )
        print(f"energy: {result.energy:.12g}")
        for name, lam, bound, lam_d, above, sat in (
            ("fermion", result.lambda_g_f, result.bound_f, d.lambda_d_f, result.above_baseline_f, result.saturated_f),
            ("boson", result.lambda_g_b, result.bound_b, d.lambda_d_b, result.above_baseline_b, result.saturated_b),
        ):
            flags = ", ".join(flag for flag, on in (("above baseline", above), ("saturated", sat)) if on)
            print(f"lambda_G {name}: {lam:.10f}  bound {bound:g}  lambda_D {lam_d:.6f}" + (f"  ({flags})" if flags else ""))
        print(
            f"diagnostics: path={d.path} dense={d.dense} iterations={d.iterations} "
            f"residual={d.residual:.3e} converged={d.converged}"
            + ("  [outside validated regime]" if d.outside_validated_regime else "")
        )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_sweep(
    config: RunConfig,
    axes=None,
    output: str = None,
    workers: int = None,
    progress: bool = False,
    record_timing: bool = False,
    retry_failed: bool = False,
) -> int:
    axes = parse_axes(axes)
    if not axes and config.preset:
        axes = parse_axes(get_preset(config.preset).axes)
    if not axes:
        raise UsageError("sweep needs at least one --axis NAME=START:STOP:STEP (or a preset with axes)")
    try:
        spec = SweepSpec(
            config.params,
            axes,
            config.options,
            output=output,
            workers=workers,
            use_tqdm=progress or config.options.use_tqdm,
            record_timing=record_timing,
            retry_failed=retry_failed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    try:
        rows = run_sweep(spec)
    except SweepIOError as exc:
        print(f"error: {exc} ({len(exc.rows)} rows computed)", file=sys.stderr)
        return EXIT_ERROR

    # stdout carries only CSV when no --out is given
    report_stream = sys.stdout if output is not None else sys.stderr
    print(_header(config), file=report_stream)
    if output is None:
        sys.stdout.write(render_rows(rows))
    else:
        print(f"wrote {len(rows)} rows to {output}", file=report_stream)
    if [axis.name for axis in spec.axes] == ["mu"]:
        for sector, onsets in onset_report(rows).items():
            for label, level, threshold in onsets:
                where = "never reached" if threshold is None else f"mu* = {format_float(threshold)}"
                print(f"onset {sector} {label}: lambda_G >= {level:.4g} {where}", file=report_stream)
    n_failed = sum(not row.converged for row in rows)
    if n_failed:
        print(f"{n_failed} grid point(s) did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_validate(max_n: int = 3, battery: str = "default", config: RunConfig = None) -> int:
    options = config.options if config is not None else None
    report = run_validation(int(max_n), battery, options)
    print(f"mpw {__version__}  validate max_n={max_n} battery={battery}  seed={options.seed if options else 1234}")
    for check in report.failures:
        print(check)
    n_checks = len(report.checks)
    print(f"{n_checks - len(report.failures)}/{n_checks} checks passed")
    return EXIT_OK if report.passed else EXIT_ERROR


def cmd_bound(n: int, r: int) -> int:
    print(format_float(theoretical_bound(int(n), int(r))))
    return EXIT_OK


def _coalesce_axes(argv: list) -> list:
    """Fold repeated ``--axis`` flags into one comma-separated value."""
    axes, rest = [], []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg == "--axis" and i + 1 < len(argv):
            axes.append(argv[i + 1])
            i += 2
            continue
        if arg.startswith("--axis="):
            axes.append(arg.split("=", 1)[1])
        else:
            rest.append(arg)
        i += 1
    if axes:
        rest.append("--axis=" + ",".join(axes))
    return rest


class MPWCommands:
    """Mixed fermion/boson particle-hole witness."""

    def _config(self, overrides: dict, config=None, preset=None) -> RunConfig:
        return RunConfig.from_sources(config_path=config, overrides=overrides, preset=preset)

    def witness(
        self,
        nf=None, nb=None, eps_f=None, eps_b=None, vf=None, vb=None, mu=None,
        solver=None, tol=None, max_iter=None, seed=None, reorth=None, dense_threshold=None,
        config=None, preset=None, json=False, print_config=False,
    ):
        """Ground state and lambda_G of both sectors at one parameter point."""
        overrides = dict(
            n_f=nf, n_b=nb, eps_f=eps_f, eps_b=eps_b, v_f=vf, v_b=vb, mu=mu, solver=solver, tolerance=tol,
            max_iterations=max_iter, seed=seed, reorthogonalization=reorth, dense_threshold=dense_threshold,
        )
        run_config = self._config(overrides, config, preset)
        if print_config:
            _print_config(run_config)
            return
        _finish(cmd_witness(run_config, as_json=json))

    def sweep(
        self,
        nf=None, nb=None, eps_f=None, eps_b=None, vf=None, vb=None, mu=None,
        solver=None, tol=None, max_iter=None, seed=None, reorth=None, dense_threshold=None,
        axis=None, out=None, workers=None, config=None, preset=None,
        retry_failed=False, timing=False, progress=False, print_config=False,
    ):
        """Witness over a 1D or 2D grid; CSV (or .jsonl) plus a .meta.json sidecar."""
        overrides = dict(
            n_f=nf, n_b=nb, eps_f=eps_f, eps_b=eps_b, v_f=vf, v_b=vb, mu=mu, solver=solver, tolerance=tol,
            max_iterations=max_iter, seed=seed, reorthogonalization=reorth, dense_threshold=dense_threshold,
        )
        run_config = self._config(overrides, config, preset)
        if isinstance(axis, str):
            axis = [token for token in axis.split(",") if token]
        if print_config:
            _print_config(run_config)
            for token in parse_axes(axis):
                print(f"# axis {token}")
            return
        out = None if out is None else str(out)
        _finish(cmd_sweep(run_config, axis, out, workers, progress, timing, retry_failed))

    def validate(self, max_n=3, battery="default", seed=None, tol=None):
        """Oracle suite: solve paths, particle-hole constructions and RDM invariants for N <= max_n."""
        overrides = dict(n_f=1, n_b=1, seed=seed, tolerance=tol)
        _finish(cmd_validate(max_n, battery, self._config(overrides)))

    def bound(self, n, r):
        """Upper bound N (r - N) / r on lambda_G."""
        _finish(cmd_bound(n, r))

    def version(self):
        return __version__


def _finish(code: int):
    if code:
        raise SystemExit(code)


def main(argv=None) -> int:
    level = os.environ.get("MPW_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    argv = _coalesce_axes(list(sys.argv[1:] if argv is None else argv))
    try:
        fire.Fire(MPWCommands, command=argv, name="mpw")
    except fire.core.FireExit as exc:
        return EXIT_OK if not exc.code else EXIT_ERROR
    except SystemExit as exc:
        return int(exc.code or 0)
    except MPWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
