"""Finite-state Markov channel: validation, n-step matrices, stationary law.

Transition matrices are row-stochastic throughout the package: entry
``(i, j)`` of ``P`` is ``Pr[s[t+1] = j | s[t] = i]``, so the distribution
of the channel ``n`` slots after it was seen in state ``i`` is row ``i`` of
``P**n``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from aocsi.errors import (
    DimensionMismatch,
    NegativeEntry,
    NonStochasticRow,
    NoUniqueStationary,
    ReliabilityOutOfRange,
)

ROW_SUM_TOL = 1e-9
ENTRY_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Hidden M-state Markov chain with a packet-success probability per state.

    Build instances through :func:`validate_model`; the constructor itself
    only checks shapes.
    """

    transition: np.ndarray
    reliability: np.ndarray
    _powers: list = field(default_factory=list, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "transition", _frozen(self.transition))
        object.__setattr__(self, "reliability", _frozen(self.reliability))
        self._powers.append(_frozen(np.eye(self.num_states)))

    @property
    def num_states(self) -> int:
        return self.reliability.shape[0]

    def power(self, n: int) -> np.ndarray:
        """Return ``P**n``; every power up to ``n`` is memoized."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        powers = self._powers
        if n < len(powers):
            return powers[n]
        with self._lock:
            while len(powers) <= n:
                powers.append(_frozen(powers[-1] @ self.transition))
        return powers[n]


@dataclass(frozen=True)
class StepMatrixCache:
    base: ChannelModel
    powers: tuple

    @classmethod
    def build(cls, model: ChannelModel, horizon: int) -> "StepMatrixCache":
        """Eagerly compute ``P**1 .. P**horizon``."""
        model.power(horizon)
        return cls(model, tuple(model.power(n) for n in range(1, horizon + 1)))

    def __getitem__(self, n: int) -> np.ndarray:
        if n == 0:
            return self.base.power(0)
        return self.powers[n - 1]

    def __len__(self) -> int:
        return len(self.powers)


def validate_model(raw_matrix: Sequence[Sequence[float]], raw_reliability: Sequence[float]) -> ChannelModel:
    """Check a transition matrix and reliability map and wrap them in a model.

    Invalid input is rejected, never renormalized.  The error names the
    first violated invariant.
    """
    try:
        matrix = np.asarray(raw_matrix, dtype=float)
        reliability = np.asarray(raw_reliability, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"could not read channel arrays: {exc}") from exc
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"transition matrix must be square, got shape {matrix.shape}")
    m = matrix.shape[0]
    if m < 2:
        raise DimensionMismatch(f"a channel needs at least 2 states, got {m}")
    if reliability.shape != (m,):
        raise DimensionMismatch(
            f"reliability has shape {reliability.shape}, expected ({m},) to match the matrix"
        )
    if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(reliability))):
        raise DimensionMismatch("channel arrays must contain finite numbers only")

    for i in range(m):
        for j in range(m):
            v = matrix[i, j]
            if v < -ENTRY_TOL or v > 1 + ENTRY_TOL:
                raise NegativeEntry(i, j, float(v))
        total = float(matrix[i].sum())
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise NonStochasticRow(i, total)
    for k, v in enumerate(reliability):
        if not 0.0 <= v <= 1.0:
            raise ReliabilityOutOfRange(k, float(v))
    return ChannelModel(np.clip(matrix, 0.0, 1.0), reliability)


def n_step_matrix(model: ChannelModel, n: int) -> np.ndarray:
    return model.power(n)


def closed_classes(matrix: np.ndarray, tol: float = 0.0) -> list[np.ndarray]:
    """Indices of each closed communicating class of a stochastic matrix."""
    adj = matrix > tol
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    classes = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        outside = np.ones(matrix.shape[0], dtype=bool)
        outside[members] = False
        if not adj[np.ix_(members, outside)].any():
            classes.append(members)
    return classes


def class_stationary(matrix: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Stationary law of the chain restricted to one closed class."""
    sub = matrix[np.ix_(members, members)]
    k = len(members)
    if k == 1:
        return np.ones(1)
    a = sub.T - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def is_aperiodic(matrix: np.ndarray, members: np.ndarray) -> bool:
    """Whether a closed class is aperiodic, i.e. some power is entrywise positive.

    Wielandt's bound ``(k - 1)**2 + 1`` caps the power that needs checking.
    """
    k = len(members)
    adj = (matrix[np.ix_(members, members)] > 0).astype(float)
    reach = adj.copy()
    for _ in range((k - 1) ** 2):
        reach = np.minimum(reach @ adj, 1.0)
    return bool(reach.all())


def steady_state(model: ChannelModel) -> np.ndarray:
    """Stationary distribution of the channel chain, the limit of ``P**n``.

    Raises :class:`NoUniqueStationary` when the chain has more than one
    closed class or its recurrent class is periodic, so ``P**n`` has no
    limit.
    """
    classes = closed_classes(model.transition)
    if len(classes) != 1:
        raise NoUniqueStationary(
            f"chain has {len(classes)} closed classes; the stationary distribution is not unique"
        )
    if not is_aperiodic(model.transition, classes[0]):
        raise NoUniqueStationary("recurrent class is periodic; P**n does not converge")
    pi = np.zeros(model.num_states)
    pi[classes[0]] = class_stationary(model.transition, classes[0])
    return pi
