"""Excited (cookie) random walks on the integers with a drifted tail.

Simulation, exact small-horizon laws, the associated branching process
with migration, and numerical checks of the drift identities.
"""

__version__ = "0.1.0"

from .profile import CookieProfile, binary_upper_bound, dominates, finite_drift, prob_at  # noqa: E402

__all__ = [
    "CookieProfile",
    "binary_upper_bound",
    "dominates",
    "finite_drift",
    "prob_at",
    "__version__",
]
