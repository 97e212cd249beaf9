"""Coulomb-coupling schedules for one braiding cycle and the flux-to-coupling map.

Units: hbar = 1, energies in Delta_0 = hbar/T_0, times in T_0.

A cycle visits the three "corners" of coupling space, where exactly one
coupling is at ``delta_max`` and the other two idle at ``delta_min``. The
forward corner order is 1 -> 2 -> 3 -> 1; ``direction="reversed"`` walks the
same corners in the opposite cyclic order from the same start corner. Each
leg lasts ``t0``, so a cycle lasts ``3 * t0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

DEFAULT_DELTA_MAX = 500.0
DEFAULT_MIN_RATIO = 1e-4

_FORWARD = (0, 1, 2)


@dataclass(frozen=True)
class CouplingSet:
    delta1: float
    delta2: float
    delta3: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"couplings must be finite and nonnegative, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.delta1, self.delta2, self.delta3)

    @property
    def e0(self) -> float:
        """Half the gap between ground and excited manifolds."""
        return math.hypot(self.delta1, self.delta2, self.delta3)

    def swap13(self) -> "CouplingSet":
        return CouplingSet(self.delta3, self.delta2, self.delta1)


@dataclass(frozen=True)
class PathSpec:
    """A closed braiding path in (Delta_1, Delta_2, Delta_3) space.

    ``start_corner`` (1, 2 or 3) is the coupling that is on at ``t = 0``.
    """

    kind: Literal["circular", "square"] = "circular"
    delta_max: float = DEFAULT_DELTA_MAX
    delta_min: float | None = None
    t0: float = 1.0
    direction: Literal["forward", "reversed"] = "forward"
    start_corner: int = 1

    def __post_init__(self):
        if self.kind not in ("circular", "square"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if self.direction not in ("forward", "reversed"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.start_corner not in (1, 2, 3):
            raise ValueError("start_corner must be 1, 2 or 3")
        if self.delta_min is None:
            object.__setattr__(self, "delta_min", DEFAULT_MIN_RATIO * self.delta_max)
        if not (0 <= self.delta_min < self.delta_max) or not math.isfinite(self.delta_max):
            raise ValueError("need 0 <= delta_min < delta_max < inf")
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")

    @property
    def t_cycle(self) -> float:
        return 3.0 * self.t0

    @property
    def corners(self) -> tuple[int, int, int]:
        """Zero-based axis indices in the order visited."""
        order = _FORWARD if self.direction == "forward" else (0, 2, 1)
        k = order.index(self.start_corner - 1)
        return order[k:] + order[:k]

    def reversed(self) -> "PathSpec":
        flip = "reversed" if self.direction == "forward" else "forward"
        return PathSpec(self.kind, self.delta_max, self.delta_min, self.t0, flip, self.start_corner)


def _leg_values(kind: str, s: np.ndarray, dmin: float, dmax: float) -> tuple[np.ndarray, np.ndarray]:
    """(outgoing, incoming) coupling along a leg at fraction ``s`` in [0, 1]."""
    amp = dmax - dmin
    if kind == "circular":
        theta = 0.5 * np.pi * s
        # cos(pi/2) is 6e-17, not 0; snap so the cycle closes exactly
        cos = np.where(s >= 1.0, 0.0, np.cos(theta))
        return dmin + amp * cos, dmin + amp * np.sin(theta)
    up = np.clip(2.0 * s, 0.0, 1.0)
    down = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return np.where(down >= 1.0, dmin, dmax - amp * down), dmin + amp * up


def couplings_array(path: PathSpec, t) -> np.ndarray:
    """Vectorized schedule: array of shape ``t.shape + (3,)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12 * path.t_cycle) or np.any(t > path.t_cycle * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {path.t_cycle}]")
    t = np.clip(t, 0.0, path.t_cycle)
    u = t / path.t0
    leg = np.minimum(np.floor(u).astype(int), 2)
    s = u - leg
    out = np.full(t.shape + (3,), path.delta_min, dtype=float)
    corners = path.corners
    for j in range(3):
        mask = leg == j
        if not np.any(mask):
            continue
        a, b = corners[j], corners[(j + 1) % 3]
        off, on = _leg_values(path.kind, s[mask], path.delta_min, path.delta_max)
        out[mask, a] = off
        out[mask, b] = on
    return out


def coupling_at(path: PathSpec, t: float) -> CouplingSet:
    """(Delta_1, Delta_2, Delta_3) at time ``t`` in ``[0, 3 * t0]``."""
    if not (0.0 <= t <= path.t_cycle):
        raise ValueError(f"t={t} outside [0, {path.t_cycle}]")
    return CouplingSet(*(float(v) for v in couplings_array(path, t)))


def e0_array(path: PathSpec, t) -> np.ndarray:
    return np.linalg.norm(couplings_array(path, t), axis=-1)


@dataclass(frozen=True)
class FluxParams:
    e_j0: float
    e_c: float
    prefactor: float = 1.0

    def __post_init__(self):
        if self.e_c <= 0 or self.e_j0 <= 0:
            raise ValueError("E_J0 and E_C must be positive")

    @property
    def in_transmon_regime(self) -> bool:
        return self.e_j0 / self.e_c >= 10.0


class FluxDomainError(ValueError):
    pass


def flux_to_coupling(phase: float, fp: FluxParams) -> float:
    """Coulomb coupling for reduced flux ``phase = e * Phi / hbar``.

    ``prefactor * exp(-sqrt(8 E_J0 cos(phase) / E_C))``, valid for
    ``|phase| < pi/2`` where the Josephson energy stays positive.
    """
    if not abs(phase) < 0.5 * math.pi:
        raise FluxDomainError(f"|e Phi / hbar| = {abs(phase)} must be below pi/2")
    return fp.prefactor * math.exp(-math.sqrt(8.0 * fp.e_j0 * math.cos(phase) / fp.e_c))
