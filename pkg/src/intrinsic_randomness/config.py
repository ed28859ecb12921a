"""Run-time limits and defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass

EXACT_CAP_ENV = "INTRINSIC_RANDOMNESS_EXACT_MAX_N"


@dataclass(frozen=True)
class Limits:
    max_parties: int = 15
    # exact LP mode; larger n goes through the float solver
    exact_max_n: int = 5
    float_tolerance: float = 1e-9


def limits() -> Limits:
    """Defaults, with the exact-mode cap overridable from the environment."""
    raw = os.environ.get(EXACT_CAP_ENV)
    if raw is None:
        return Limits()
    return Limits(exact_max_n=int(raw))
