"""Kernel selection: compiled simulation loop when available, Python otherwise.

The compiled extension is a twin of :mod:`forksim.runner` operating on the
same PCG64 stream with the same draw order; results are bit-identical (the
parity tests enforce this).  Set ``FORKSIM_PURE_PYTHON=1`` to force the
fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from .runner import RunConfig, RunResult, simulate_run_python

try:
    from . import _speedups
except ImportError:
    _speedups = None


def compiled_available() -> bool:
    return _speedups is not None


def using_compiled() -> bool:
    return compiled_available() and os.environ.get("FORKSIM_PURE_PYTHON") != "1"


def simulate_run(config: RunConfig, force_python: bool = False) -> RunResult:
    """Simulate one seeded run with the fastest available implementation."""
    if force_python or not using_compiled():
        return simulate_run_python(config)
    return _speedups.simulate_run_native(config)
