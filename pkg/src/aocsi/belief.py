"""Age-conditioned beliefs about the hidden channel state.

The transmitter's knowledge at a decision epoch is the age of its last
channel measurement and the state it measured.  Everything it can say about
the current state follows from one row of ``P**age``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from aocsi.channel import ChannelModel
from aocsi.errors import InvalidObservation


@dataclass(frozen=True, order=True)
class AgedObservation:
    age: int
    last_state: int

    def __post_init__(self):
        if int(self.age) != self.age or self.age < 1:
            raise InvalidObservation(f"age must be an integer >= 1, got {self.age!r}")
        if int(self.last_state) != self.last_state or self.last_state < 0:
            raise InvalidObservation(f"last_state must be a non-negative integer, got {self.last_state!r}")


def _check(model: ChannelModel, obs: AgedObservation) -> None:
    if obs.last_state >= model.num_states:
        raise InvalidObservation(
            f"last_state {obs.last_state} is not a state of a {model.num_states}-state channel"
        )


# per-model memo: age -> (expected reliability per sigma, mse per sigma)
_moments: "weakref.WeakKeyDictionary[ChannelModel, dict]" = weakref.WeakKeyDictionary()


def _age_moments(model: ChannelModel, age: int) -> tuple[np.ndarray, np.ndarray]:
    table = _moments.setdefault(model, {})
    hit = table.get(age)
    if hit is None:
        dist = model.power(age)
        r = model.reliability
        r_hat = dist @ r
        mse = np.einsum("ij,ij->i", dist, (r[None, :] - r_hat[:, None]) ** 2)
        r_hat.setflags(write=False)
        mse.setflags(write=False)
        hit = table[age] = (r_hat, mse)
    return hit


def state_distribution(model: ChannelModel, obs: AgedObservation) -> np.ndarray:
    """Distribution of the current channel state given the observation."""
    _check(model, obs)
    return model.power(obs.age)[obs.last_state]


def expected_reliability(model: ChannelModel, obs: AgedObservation) -> float:
    _check(model, obs)
    return float(_age_moments(model, obs.age)[0][obs.last_state])


def reliability_mse(model: ChannelModel, obs: AgedObservation) -> float:
    """Conditional variance of the current reliability given the observation."""
    _check(model, obs)
    return float(_age_moments(model, obs.age)[1][obs.last_state])


class AgeCurveRow(NamedTuple):
    delta: int
    last_state: int
    expected_reliability: float
    mse: float


@dataclass(frozen=True)
class AgeCurveTable:
    rows: tuple[AgeCurveRow, ...]
    delta_max: int
    num_states: int

    CSV_HEADER = ("delta", "last_state", "expected_reliability", "mse")

    def __iter__(self) -> Iterator[AgeCurveRow]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def reliability_grid(self) -> np.ndarray:
        """Array of shape ``(delta_max, M)``; row ``k`` holds age ``k + 1``."""
        return np.array([r.expected_reliability for r in self.rows]).reshape(self.delta_max, self.num_states)

    def mse_grid(self) -> np.ndarray:
        return np.array([r.mse for r in self.rows]).reshape(self.delta_max, self.num_states)


def age_curves(model: ChannelModel, delta_max: int) -> AgeCurveTable:
    if delta_max < 1:
        raise ValueError(f"delta_max must be >= 1, got {delta_max}")
    rows = []
    for age in range(1, delta_max + 1):
        r_hat, mse = _age_moments(model, age)
        for sigma in range(model.num_states):
            rows.append(AgeCurveRow(age, sigma, float(r_hat[sigma]), float(mse[sigma])))
    return AgeCurveTable(tuple(rows), delta_max, model.num_states)
