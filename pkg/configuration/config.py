"""
Configuration module for the CPR splitting toolkit
"""
import os

import numpy as np
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Numerical tolerances shared by every module (all relative unless noted)
TOLERANCES = {
    "herm_tol": 1e-10,
    "unitary_tol": 1e-10,
    "repair_limit": 1e-6,     # wrapper repairs above this are errors
    "pd_floor": 1e-12,        # times the operator norm
    "inv_floor": 1e-12,       # times the operator norm
    "membership_tol": 1e-10,  # X in B decided by ||X - E(X)||_F
    "check_tol": 1e-10,       # pass/fail threshold of verification reports
    "equality_tol": 1e-8,     # coset, bundle and tangent equality
    "gap": 1e-6               # coadjoint spectral gap
}

# Nonlinear solver for the CPR splitting
SOLVER = {
    "residual_tol": 1e-12,
    "max_iterations": 200,
    "damping_shrink": 0.5,
    "fallback": "newton_fallback",
    "min_step": 1e-8,
    "newton_step": 1e-6
}

# Derivative-free oracle for psi_split
ORACLE = {
    "tol": 1e-8,
    "max_dim": 6,
    "max_sweeps": 20000,
    "initial_step": 0.5
}

# Curvature criteria
CURVATURE = {
    "t_grid": tuple(float(t) for t in np.logspace(-2, 2, 9)),
    "bases": 4,
    "pass_ratio": 1 - 1e-9,
    "series_cutoff": 1e-4
}

# Sampling defaults for verification suites and the CLI
SAMPLING = {
    "seed": 0,
    "samples": 20,
    "dim": 4,
    "spectrum_clip": 2.0
}

# CLI norm flags
NORM_FLAGS = {
    "op": "operator",
    "fro": "frobenius",
    "s1": "schatten:1",
    "s2": "schatten:2",
    "s4": "schatten:4"
}

# Verification suites available to the CLI
SUITES = ["core", "expectations", "splitting", "homogeneous", "curvature"]


def _threads_from_env():
    """Read the parallelism cap from CPR_SPLIT_THREADS"""
    value = os.getenv("CPR_SPLIT_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


PARALLEL = {
    "threads": _threads_from_env()
}
