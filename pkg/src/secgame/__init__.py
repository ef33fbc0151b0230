"""Noncooperative secrecy-rate games with artificial noise in MIMO wiretap
interference networks: rate functions, VI machinery, distributed solvers,
a centralized benchmark, and an experiment harness."""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
