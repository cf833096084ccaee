"""One particle per column in each sector, 2^N states per sector. Default path."""
from ..basis import composite_basis
from ..eigensolver import solve_ground


def build_path_basis(params):
    return composite_basis(params.n_f, params.n_b, "column")


def solve_path(model, basis, opts):
    return solve_ground(model, basis, opts, path="column")
