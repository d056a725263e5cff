"""Level crossings of periodic graph Hamiltonians via the A_{k-1} unfolding."""

__version__ = "0.1.0"

from .graph_model import MODEL_NAMES, ModelError, builtin_model  # noqa: E402
from .charpoly import char_poly, cycle_expansion, traceless_shift  # noqa: E402
from .critical_finder import FinderOptions, find_critical_points  # noqa: E402
from .region import RegionOptions, sample_region  # noqa: E402

__all__ = [
    "__version__", "MODEL_NAMES", "ModelError", "builtin_model", "char_poly", "cycle_expansion",
    "traceless_shift", "FinderOptions", "find_critical_points", "RegionOptions", "sample_region",
]
