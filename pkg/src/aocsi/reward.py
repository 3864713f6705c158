"""Per-slot reward: transmission gain plus a scaled channel-uncertainty penalty."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from aocsi.belief import AgedObservation, expected_reliability, reliability_mse
from aocsi.channel import ChannelModel
from aocsi.errors import InvalidRewardParams


class ActionKind(enum.IntEnum):
    IDLE = 0
    PROBE = 1
    TRANSMIT = 2

    @property
    def letter(self) -> str:
        return "ICT"[self]

    @classmethod
    def from_letter(cls, letter: str) -> "ActionKind":
        try:
            return cls("ICT".index(letter))
        except ValueError:
            raise ValueError(f"unknown action letter {letter!r}; expected one of I, C, T") from None


@dataclass(frozen=True)
class RewardParams:
    """Reward surface.  The idle action is always free of energy cost."""

    r_suc: float
    r_fail: float
    eps_t: float
    eps_c: float
    beta: float

    def __post_init__(self):
        values = (self.r_suc, self.r_fail, self.eps_t, self.eps_c, self.beta)
        if not all(math.isfinite(v) for v in values):
            raise InvalidRewardParams("reward parameters must be finite")
        if not 0 < self.eps_c < self.eps_t:
            raise InvalidRewardParams(
                f"need 0 < eps_c < eps_t, got eps_c={self.eps_c!r}, eps_t={self.eps_t!r}"
            )
        if self.beta < 0:
            raise InvalidRewardParams(f"beta must be >= 0, got {self.beta!r}")
        if self.r_suc < self.r_fail:
            raise InvalidRewardParams(
                f"r_suc ({self.r_suc!r}) must not be below r_fail ({self.r_fail!r})"
            )


def transmit_reward(params: RewardParams, r_hat: float) -> float:
    """Expected gain of a transmission attempt with success probability ``r_hat``."""
    if not 0.0 <= r_hat <= 1.0:
        raise ValueError(f"r_hat must lie in [0, 1], got {r_hat!r}")
    return r_hat * params.r_suc + (1.0 - r_hat) * params.r_fail - params.eps_t


def channel_penalty(params: RewardParams, mse: float, action: ActionKind) -> float:
    if mse < 0:
        raise ValueError(f"mse must be non-negative, got {mse!r}")
    if action == ActionKind.PROBE:
        return -params.eps_c
    return -mse


def total_reward(params: RewardParams, model: ChannelModel, obs: AgedObservation, action: ActionKind) -> float:
    action = ActionKind(action)
    gain = transmit_reward(params, expected_reliability(model, obs)) if action == ActionKind.TRANSMIT else 0.0
    mse = 0.0 if action == ActionKind.PROBE else reliability_mse(model, obs)
    return gain + params.beta * channel_penalty(params, mse, action)
