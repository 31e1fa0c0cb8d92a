"""Scalar plant model, loop algebra and cost accounting.

The controlled process is the scalar linear plant

    x(t+1) = A x(t) + u(t) + w(t),    |A| > 1,

driven over an analog (uncoded) feedback loop: the controller transmits
v(t) = K x(t), the channel returns r(t) = H v(t) + z(t), and the actuator
applies u(t) = G r(t).  For a constant channel gain the closed loop collapses
to

    x(t+1) = A_c x(t) + G z(t) + w(t),    A_c = A + G H K,

so every design question in this package reduces to placing the closed-loop
factor A_c and the noise amplification G under a transmit-SNR budget.  The
quadratic cost is the long-run time average of E[x(t)^2] summed over plants.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

#: trajectories whose magnitude passes this guard are truncated and reported
#: as diverged instead of polluting averages with overflow
DIVERGENCE_GUARD = 1e12


class _UnboundedType:
    """Tagged value for a provably unbounded average cost.

    Kept distinct from ``float("inf")`` so a report can tell "the closed form
    says the loop is unstable" apart from "a simulated trajectory overflowed".
    """

    __slots__ = ()

    def __repr__(self) -> str:
        return "UNBOUNDED"


UNBOUNDED = _UnboundedType()

#: a predicted cost is either a finite float or the unbounded sentinel
PredictedCost = Union[float, _UnboundedType]


@dataclass(frozen=True)
class PlantParams:
    """Open-loop plant: gain ``a`` with |a| > 1 and disturbance power ``sigma_w2``."""

    a: float
    sigma_w2: float

    def __post_init__(self) -> None:
        if abs(self.a) <= 1.0:
            raise ValueError(
                f"plant gain must satisfy |a| > 1 (got a={self.a!r}); "
                "a stable plant needs no feedback loop"
            )
        if self.sigma_w2 < 0.0:
            raise ValueError(f"disturbance power must be >= 0 (got {self.sigma_w2!r})")


@dataclass(frozen=True)
class NoisePowers:
    """Channel noise power ``sigma_z2`` and the transmit power budget ``p0``.

    Both are linear watts.  ``gamma0`` is the SNR budget p0/sigma_z2; ``ssr``
    is the disturbance-to-channel-noise ratio sigma_w2/sigma_z2 of a given
    plant, the quantity that couples control performance to link quality.
    """

    sigma_z2: float
    p0: float

    def __post_init__(self) -> None:
        if self.sigma_z2 <= 0.0:
            raise ValueError(f"channel noise power must be > 0 (got {self.sigma_z2!r})")
        if self.p0 <= 0.0:
            raise ValueError(f"power budget must be > 0 (got {self.p0!r})")

    @property
    def gamma0(self) -> float:
        return self.p0 / self.sigma_z2

    def ssr(self, plant: PlantParams) -> float:
        return plant.sigma_w2 / self.sigma_z2


@dataclass(frozen=True)
class GainPair:
    """Controller factor ``k`` and actuator factor ``g``.

    Designs produced by the optimizers in this package always satisfy g > 0
    and k < 0 (negative feedback); the pair itself is just a value container.
    """

    k: float
    g: float

    @property
    def product(self) -> float:
        return self.g * self.k


@dataclass(frozen=True)
class PlantState:
    """State value ``x`` at discrete time ``t``."""

    x: float
    t: int


def step_plant(plant: PlantParams, state: PlantState, u: float, w: float) -> PlantState:
    """One step of x(t+1) = a x(t) + u + w.  Pure function, no hidden state."""
    return PlantState(x=plant.a * state.x + u + w, t=state.t + 1)


@dataclass(frozen=True)
class PlantCost:
    """Per-plant slice of a cost report."""

    plant_id: int
    cost: float
    stable: bool


@dataclass(frozen=True)
class CostReport:
    """Empirical (and optionally predicted) quadratic cost over a horizon.

    ``j_t`` is the realized time-average sum cost; ``per_plant`` carries the
    per-plant breakdown whose costs sum to ``j_t``; ``j_ave_predicted`` is the
    closed-form steady-state value when the caller knows it (the UNBOUNDED
    sentinel for provably unstable designs).
    """

    j_t: float
    per_plant: tuple[PlantCost, ...]
    horizon: int
    j_ave_predicted: Optional[PredictedCost] = None


def empirical_cost(
    trajectories: Mapping[int, Sequence[float]],
    horizon: Optional[int] = None,
    burn_in: int = 0,
) -> CostReport:
    """Time-average sum of squared states over ``horizon`` steps.

    ``trajectories`` maps plant id -> state sequence x(1..T), either a flat
    array of length >= T or a (replicas, T) array that is averaged across
    replicas.  ``burn_in`` drops the first ``burn_in`` entries from the
    average (default 0: the literal running cost, transient included).
    """
    if not trajectories:
        raise ValueError("empirical_cost needs at least one plant trajectory")
    arrays = {pid: np.atleast_2d(np.asarray(seq, dtype=float)) for pid, seq in trajectories.items()}
    if horizon is None:
        horizon = min(arr.shape[-1] for arr in arrays.values())
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1 (got {horizon})")
    if not 0 <= burn_in < horizon:
        raise ValueError(f"burn_in must satisfy 0 <= burn_in < horizon (got {burn_in})")
    per_plant = []
    for pid, arr in sorted(arrays.items()):
        if arr.shape[-1] < horizon:
            raise ValueError(
                f"plant {pid}: trajectory length {arr.shape[-1]} < horizon {horizon}"
            )
        window = arr[:, burn_in:horizon]
        cost = float(np.mean(window**2, axis=1).mean())
        stable = bool(np.all(np.abs(arr[:, :horizon]) <= DIVERGENCE_GUARD))
        per_plant.append(PlantCost(plant_id=pid, cost=cost, stable=stable))
    total = float(sum(p.cost for p in per_plant))
    return CostReport(j_t=total, per_plant=tuple(per_plant), horizon=horizon)


def predicted_cost_slow(
    plant: PlantParams, noise: NoisePowers, gains: GainPair, h: float
) -> PredictedCost:
    """Steady-state cost (g^2 sigma_z2 + sigma_w2)/(1 - A_c^2) of a fixed-gain loop.

    Returns the UNBOUNDED sentinel when |A_c| >= 1: with an unstable closed
    loop the second moment grows geometrically and no steady state exists.
    """
    if h <= 0.0:
        raise ValueError(f"channel gain magnitude must be > 0 (got {h!r})")
    a_c = plant.a + gains.g * h * gains.k
    if abs(a_c) >= 1.0:
        return UNBOUNDED
    return (gains.g**2 * noise.sigma_z2 + plant.sigma_w2) / (1.0 - a_c**2)
