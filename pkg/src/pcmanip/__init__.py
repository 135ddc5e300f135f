"""pcmanip: forging, attacking and neural detection of manipulated
pairwise-comparison matrices.

Importing this package pins BLAS thread pools to one thread unless the
environment already says otherwise; trained results are only reproducible
under a fixed thread policy.  Submodules are loaded lazily so the CLI can
adjust the thread policy from flags before numpy initializes.
"""

import importlib
import os

for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
):
    os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

_SUBMODULES = (
    "attacks",
    "cli",
    "core",
    "dataset",
    "errors",
    "experiments",
    "features",
    "kernels",
    "nn",
)

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
