__version__ = "0.1.0"

from .mpw_config import RunConfig, SolveOptions, SystemParams
from .witness import WitnessResult, compute_witness, theoretical_bound
from .sweep_engine import SweepSpec, onset_threshold, run_sweep
