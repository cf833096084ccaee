"""
Solve paths, one module each. A path module exposes

    build_path_basis(params) -> CompositeBasis
    solve_path(model, basis, opts) -> GroundState

and is registered under its file name.
"""
import importlib
from pathlib import Path

from ..errors import ParameterError

PATH_HOOKS = ("build_path_basis", "solve_path")

solver_basis_map = {}
solver_run_map = {}


def register_path(name: str, module):
    missing = [hook for hook in PATH_HOOKS if not callable(getattr(module, hook, None))]
    if missing:
        raise ParameterError(f"solve path {name!r} is missing {', '.join(missing)}")
    solver_basis_map[name] = module.build_path_basis
    solver_run_map[name] = module.solve_path


def get_path(name: str) -> tuple:
    """``(build_path_basis, solve_path)`` for a registered path."""
    if name not in solver_run_map:
        raise ParameterError(f"unknown solver path {name!r}, expected one of {sorted(solver_run_map)}")
    return solver_basis_map[name], solver_run_map[name]


for file in sorted(Path(__file__).parent.glob("*.py")):
    if file.name == "__init__.py":
        continue
    register_path(file.stem, importlib.import_module(f".{file.stem}", package=__package__))

__all__ = sorted(solver_run_map) + ["PATH_HOOKS", "get_path", "register_path", "solver_basis_map", "solver_run_map"]
