"""Cookie environments: the per-visit right-step probabilities of the walk.

A profile ``(p_1, ..., p_M; q)`` gives the probability of stepping right on
the i-th visit to any site: ``p_i`` for ``i <= M`` and ``q`` afterwards.
The same profile serves every site of the integer line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

#: Probabilities closer than this to 0 or 1 are rejected.
PROB_EPS = 1e-12

#: Extra drift used by :func:`binary_upper_bound` when no cookie exceeds 1/2.
UPPER_BOUND_MARGIN = 0.25


def _check_prob(value: float, what: str) -> float:
    value = float(value)
    if not (PROB_EPS < value < 1.0 - PROB_EPS):
        raise ValueError(f"{what} must lie strictly inside (0, 1), got {value!r}")
    return value


@dataclass(frozen=True)
class CookieProfile:
    """Immutable cookie stack plus tail probability.

    Trailing cookies equal to the tail are dropped, so two profiles that
    define the same environment compare equal.
    """

    cookie_probs: tuple[float, ...]
    tail_prob: float

    def __init__(self, cookie_probs: Sequence[float] = (), tail_prob: float = 0.5):
        tail = _check_prob(tail_prob, "tail probability")
        probs = [_check_prob(p, f"cookie probability p_{i + 1}") for i, p in enumerate(cookie_probs)]
        while probs and probs[-1] == tail:
            probs.pop()
        object.__setattr__(self, "cookie_probs", tuple(probs))
        object.__setattr__(self, "tail_prob", tail)

    @property
    def M(self) -> int:
        return len(self.cookie_probs)

    def prob_at(self, visit_index: int) -> float:
        return prob_at(self, visit_index)

    def to_dict(self) -> dict:
        return {"cookies": list(self.cookie_probs), "tail": self.tail_prob}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "CookieProfile":
        try:
            return cls(data.get("cookies", []), data["tail"])
        except KeyError:
            raise ValueError("profile JSON needs a 'tail' field") from None

    @classmethod
    def from_json(cls, text: str) -> "CookieProfile":
        return cls.from_dict(json.loads(text))

    def __str__(self) -> str:
        cookies = ",".join(f"{p:g}" for p in self.cookie_probs)
        return f"CookieProfile(cookies=[{cookies}], tail={self.tail_prob:g})"


def prob_at(profile: CookieProfile, visit_index: int) -> float:
    """Right-step probability on the ``visit_index``-th visit to a site (1-based)."""
    if visit_index < 1:
        raise ValueError(f"visit_index is 1-based, got {visit_index}")
    if visit_index <= profile.M:
        return profile.cookie_probs[visit_index - 1]
    return profile.tail_prob


def finite_drift(profile: CookieProfile) -> float:
    """Sum of ``2 p_i - 1`` over the cookie stack; the tail is excluded."""
    return sum(2.0 * p - 1.0 for p in profile.cookie_probs)


def dominates(lower: CookieProfile, upper: CookieProfile) -> bool:
    """True iff ``lower`` is pointwise below ``upper`` for every visit index."""
    if lower.tail_prob > upper.tail_prob:
        return False
    # beyond both stacks only the tails matter, already compared above
    n = max(lower.M, upper.M)
    return all(prob_at(lower, i) <= prob_at(upper, i) for i in range(1, n + 1))


def binary_upper_bound(profile: CookieProfile, margin: float = UPPER_BOUND_MARGIN) -> CookieProfile:
    """Two-valued profile ``(p, ..., p; q)`` with ``p > 1/2`` dominating ``profile``.

    ``p`` is the largest cookie, lifted to ``1/2 + margin`` if needed.
    """
    if profile.tail_prob >= 0.5:
        raise ValueError("binary_upper_bound needs a tail probability below 1/2")
    if not 0.0 < margin < 0.5:
        raise ValueError("margin must lie in (0, 1/2)")
    if profile.M == 0:
        return profile
    p = max(0.5 + margin, max(profile.cookie_probs))
    return CookieProfile([p] * profile.M, profile.tail_prob)
