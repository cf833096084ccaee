"""Full sector Fock spaces, C(2N, N) states per sector. Oracle path."""
from ..basis import composite_basis
from ..eigensolver import solve_ground


def build_path_basis(params):
    return composite_basis(params.n_f, params.n_b, "full")


def solve_path(model, basis, opts):
    return solve_ground(model, basis, opts, path="full")
