import time

from mpw.mpw_config import SolveOptions, SystemParams
from mpw.utils import calculate_ci
from mpw.witness import compute_witness

NUM_RUNS = 5  # Number of runs for averaging and confidence intervals
MAX_FULL_N = 4  # full Fock space beyond this is an oracle, not a benchmark


def benchmark_paths(n_values=(2, 3, 4, 6), paths=("full", "column", "collective"), runs=NUM_RUNS, eps=5.0, vf=-0.4, vb=-2.0, mu=0.5):
    """Time compute_witness per solve path and N; prints mean ± 95% CI in seconds."""
    if isinstance(n_values, int):
        n_values = (n_values,)
    if isinstance(paths, str):
        paths = (paths,)
    timings = {}
    for n in n_values:
        params = SystemParams(n, n, eps, eps, vf, vb, mu)
        print(f"\n===== N = {n} + {n} =====")
        for path in paths:
            if path == "full" and n > MAX_FULL_N:
                print(f"{path:>10}: skipped (N > {MAX_FULL_N})")
                continue
            opts = SolveOptions(solver=path)
            times = []
            result = None
            for _ in range(runs):
                start = time.perf_counter()
                result = compute_witness(params, opts)
                times.append(time.perf_counter() - start)
            timings[(n, path)] = times
            print(
                f"{path:>10}: {calculate_ci(times)} sec (95% CI over {len(times)} runs)  "
                f"lambda_G = ({result.lambda_g_f:.6f}, {result.lambda_g_b:.6f})"
            )
    return timings


def main(n_values=(2, 3, 4, 6), paths=("full", "column", "collective"), runs=NUM_RUNS):
    benchmark_paths(n_values, paths, runs)


if __name__ == "__main__":
    import fire

    fire.Fire(main)
