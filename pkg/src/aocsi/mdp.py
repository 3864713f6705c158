"""Truncated belief MDP, relative value iteration and policy evaluation.

The belief state ``(age, last_state)`` is a sufficient statistic because
probes are noiseless.  Ages are capped at ``delta_max``; the capped states
keep their age under idle/transmit.  States are enumerated age-major, so
state ``(age, sigma)`` has index ``(age - 1) * M + sigma``.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from aocsi.belief import AgedObservation
from aocsi.channel import ChannelModel, class_stationary, closed_classes, steady_state
from aocsi.errors import DeltaMaxTooSmall, InstanceTooLarge, NoStationary, NotConverged
from aocsi.reward import ActionKind, RewardParams, total_reward

log = logging.getLogger(__name__)

ACTIONS = (ActionKind.IDLE, ActionKind.PROBE, ActionKind.TRANSMIT)
TIE_BREAK = (ActionKind.TRANSMIT, ActionKind.PROBE, ActionKind.IDLE)
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TruncatedMdp:
    model: ChannelModel
    params: RewardParams
    delta_max: int
    states: tuple[AgedObservation, ...]
    kernel: np.ndarray  # (action, state, next state)
    rewards: np.ndarray  # (state, action)
    actions: tuple[ActionKind, ...] = ACTIONS

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_channel_states(self) -> int:
        return self.model.num_states

    def index(self, obs: AgedObservation) -> int:
        if not (1 <= obs.age <= self.delta_max and 0 <= obs.last_state < self.model.num_states):
            raise KeyError(obs)
        return (obs.age - 1) * self.model.num_states + obs.last_state

    def post_probe_distribution(self) -> np.ndarray:
        """Start law used for evaluation: ``(1, sigma)`` with ``sigma`` stationary."""
        mu = np.zeros(self.num_states)
        mu[: self.model.num_states] = steady_state(self.model)
        return mu


def build_mdp(model: ChannelModel, params: RewardParams, delta_max: int) -> TruncatedMdp:
    if delta_max < 2:
        raise DeltaMaxTooSmall(f"delta_max must be >= 2, got {delta_max}")
    m = model.num_states
    states = tuple(AgedObservation(age, s) for age in range(1, delta_max + 1) for s in range(m))
    n = len(states)
    kernel = np.zeros((len(ACTIONS), n, n))
    rewards = np.zeros((n, len(ACTIONS)))
    for i, obs in enumerate(states):
        aged = (min(obs.age + 1, delta_max) - 1) * m + obs.last_state
        kernel[ActionKind.IDLE, i, aged] = 1.0
        kernel[ActionKind.TRANSMIT, i, aged] = 1.0
        # probing reveals the current state; next epoch sees it with age 1
        kernel[ActionKind.PROBE, i, :m] = model.power(obs.age)[obs.last_state]
        for a in ACTIONS:
            rewards[i, a] = total_reward(params, model, obs, a)
    kernel.setflags(write=False)
    rewards.setflags(write=False)
    return TruncatedMdp(model, params, delta_max, states, kernel, rewards)


class PolicyKind(enum.Enum):
    OPTIMAL = "optimal"
    GREEDY = "greedy"
    RANDOMIZED = "randomized"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Policy:
    """Lookup table over belief states.

    ``table[i, a]`` is the probability of action ``a`` in state ``i``.
    Deterministic policies have one-hot rows.
    """

    kind: PolicyKind
    table: np.ndarray
    delta_max: int
    num_states: int
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.shape != (self.delta_max * self.num_states, len(ACTIONS)):
            raise ValueError(
                f"policy table has shape {table.shape}, expected "
                f"({self.delta_max * self.num_states}, {len(ACTIONS)})"
            )
        if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("policy rows must be probability vectors")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @classmethod
    def deterministic(cls, kind: PolicyKind, actions: Sequence[int], delta_max: int, num_states: int,
                      metadata: Optional[Mapping] = None) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        table = np.zeros((actions.size, len(ACTIONS)))
        table[np.arange(actions.size), actions] = 1.0
        return cls(kind, table, delta_max, num_states, metadata or {})

    @classmethod
    def constant(cls, mdp: TruncatedMdp, action: ActionKind) -> "Policy":
        return cls.deterministic(PolicyKind.CUSTOM, [action] * mdp.num_states, mdp.delta_max,
                                 mdp.num_channel_states, {"action": ActionKind(action).letter})

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.table == 0.0) | (self.table == 1.0)))

    @property
    def actions(self) -> np.ndarray:
        if not self.is_deterministic:
            raise ValueError(f"{self.kind.value} policy is stochastic")
        return self.table.argmax(axis=1)

    def index(self, obs: AgedObservation) -> int:
        return (obs.age - 1) * self.num_states + obs.last_state

    def action_for(self, obs: AgedObservation) -> ActionKind:
        return ActionKind(int(self.actions[self.index(obs)]))

    def probabilities(self, obs: AgedObservation) -> np.ndarray:
        return self.table[self.index(obs)]

    def letters(self, last_state: int) -> str:
        """Actions for ``last_state`` over ages 1..delta_max, e.g. ``'TTTC...'``."""
        acts = self.actions
        m = self.num_states
        return "".join(ActionKind(int(acts[(age - 1) * m + last_state])).letter
                       for age in range(1, self.delta_max + 1))


def _argmax_with_priority(q: np.ndarray, priority=TIE_BREAK, tol: float = TIE_TOL) -> np.ndarray:
    best = q.max(axis=1, keepdims=True)
    cand = q >= best - tol
    order = np.asarray([int(a) for a in priority])
    return order[cand[:, order].argmax(axis=1)]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for relative value iteration.

    ``damping`` mixes each state's previous relative value into the update,
    ``v = max_a R + (1 - damping) * K w + damping * w``; it leaves gain and
    optimal policies unchanged and only matters for periodic chains.
    """

    theta: float = 1e-9
    ref_state: AgedObservation = AgedObservation(1, 0)
    max_iterations: int = 100_000
    damping: float = 0.0
    tie_break: tuple[ActionKind, ...] = TIE_BREAK

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping!r}")
        if sorted(int(a) for a in self.tie_break) != [0, 1, 2]:
            raise ValueError("tie_break must order all three actions")


@dataclass(frozen=True)
class SolveReport:
    policy: Policy
    gain: float
    iterations: int
    final_residual: float
    converged: bool
    relative_values: np.ndarray


def solve_rvi(mdp: TruncatedMdp, config: SolverConfig = SolverConfig(), *, strict: bool = True) -> SolveReport:
    """Relative value iteration for the average-reward criterion.

    Raises :class:`NotConverged` (with the partial report attached) when the
    iteration cap is hit, unless ``strict`` is false.
    """
    ref = mdp.index(config.ref_state)
    n_states = mdp.num_states
    tau = config.damping
    # stacked kernel: row a * N + i holds Pr[. | state i, action a]
    k = mdp.kernel.reshape(-1, n_states) * (1.0 - tau)
    r = np.ascontiguousarray(mdp.rewards.T)
    w = np.zeros(n_states)
    residual = np.inf
    n = 0
    while n < config.max_iterations:
        q = (k @ w).reshape(r.shape)
        q += r
        if tau:
            q += tau * w
        v = q.max(axis=0)
        gain = v[ref]
        v -= gain
        residual = np.abs(v - w).max()
        w = v
        n += 1
        if residual < config.theta:
            break
    gain, residual = float(gain), float(residual)
    # a damped fixed point stores h / (1 - damping) for the true relative values h
    w = w * (1.0 - tau)
    q = mdp.rewards + np.einsum("aij,j->ia", mdp.kernel, w)
    actions = _argmax_with_priority(q, config.tie_break)
    converged = residual < config.theta
    meta = {
        "gain": gain,
        "iterations": n,
        "theta": config.theta,
        "delta_max": mdp.delta_max,
        "ref_state": (config.ref_state.age, config.ref_state.last_state),
    }
    policy = Policy.deterministic(PolicyKind.OPTIMAL, actions, mdp.delta_max, mdp.num_channel_states, meta)
    w.setflags(write=False)
    report = SolveReport(policy, gain, n, residual, converged, w)
    log.debug("rvi: %d iterations, residual %.3e, gain %.12g", n, residual, gain)
    if not converged and strict:
        raise NotConverged(n, residual, report)
    return report


def greedy_policy(mdp: TruncatedMdp, tie_break=TIE_BREAK) -> Policy:
    """Maximize the one-slot reward in every state."""
    actions = _argmax_with_priority(mdp.rewards, tie_break)
    return Policy.deterministic(PolicyKind.GREEDY, actions, mdp.delta_max, mdp.num_channel_states)


def randomized_policy(mdp: TruncatedMdp) -> Policy:
    table = np.full((mdp.num_states, len(ACTIONS)), 1.0 / len(ACTIONS))
    return Policy(PolicyKind.RANDOMIZED, table, mdp.delta_max, mdp.num_channel_states)


def _check_shape(mdp: TruncatedMdp, policy: Policy) -> None:
    if policy.delta_max != mdp.delta_max or policy.num_states != mdp.num_channel_states:
        raise ValueError(
            f"policy covers delta_max={policy.delta_max}, M={policy.num_states}; "
            f"MDP has delta_max={mdp.delta_max}, M={mdp.num_channel_states}"
        )


def induced_chain(mdp: TruncatedMdp, policy: Policy) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and reward vector of the chain a policy induces."""
    _check_shape(mdp, policy)
    p = np.einsum("ia,aij->ij", policy.table, mdp.kernel)
    rew = np.einsum("ia,ia->i", policy.table, mdp.rewards)
    return p, rew


def gain_by_state(p: np.ndarray, rew: np.ndarray) -> np.ndarray:
    """Long-run average reward from every start state.

    Each closed class gets its stationary average; transient states mix the
    class averages by their absorption probabilities.
    """
    n = p.shape[0]
    classes = closed_classes(p)
    gains = np.zeros(n)
    recurrent = np.zeros(n, dtype=bool)
    class_gain = []
    try:
        for members in classes:
            pi = class_stationary(p, members)
            g = float(pi @ rew[members])
            class_gain.append(g)
            gains[members] = g
            recurrent[members] = True
        transient = np.flatnonzero(~recurrent)
        if transient.size:
            a = np.eye(transient.size) - p[np.ix_(transient, transient)]
            b = np.zeros(transient.size)
            for members, g in zip(classes, class_gain):
                b += p[np.ix_(transient, members)].sum(axis=1) * g
            gains[transient] = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NoStationary(f"induced chain analysis failed: {exc}") from exc
    return gains


def evaluate_policy_exact(mdp: TruncatedMdp, policy: Policy, model: Optional[ChannelModel] = None) -> float:
    """Exact long-run average reward of ``policy`` started just after a probe."""
    if model is not None and model is not mdp.model:
        mdp = build_mdp(model, mdp.params, mdp.delta_max)
    p, rew = induced_chain(mdp, policy)
    return float(mdp.post_probe_distribution() @ gain_by_state(p, rew))


def cesaro_gains(chains: np.ndarray, rewards: np.ndarray, start: np.ndarray, squarings: int = 80) -> np.ndarray:
    """Start-averaged long-run reward for a batch of chains.

    Independent of :func:`gain_by_state`: the lazy chain ``(I + P) / 2`` is
    aperiodic with the same Cesaro limit as ``P``, so repeated squaring of
    it converges to that limit.
    """
    lazy = 0.5 * (chains + np.eye(chains.shape[-1]))
    for _ in range(squarings):
        lazy = lazy @ lazy
        lazy /= lazy.sum(axis=-1, keepdims=True)
    return np.einsum("i,bij,bj->b", start, lazy, rewards)


def brute_force_optimal(mdp: TruncatedMdp, model: Optional[ChannelModel] = None,
                        guard: int = 10**6, batch: int = 4096) -> tuple[Policy, float]:
    """Best deterministic stationary policy by exhaustive enumeration.

    Policies are visited with state 0 as the most significant digit and each
    digit running through the tie-break order; the first policy within
    ``1e-10`` of the best gain is returned.  The returned gain is recomputed
    with :func:`evaluate_policy_exact`.
    """
    if model is not None and model is not mdp.model:
        mdp = build_mdp(model, mdp.params, mdp.delta_max)
    n = mdp.num_states
    if len(ACTIONS) ** n > guard:
        raise InstanceTooLarge(f"3**{n} policies exceed the guard of {guard}")
    mu = mdp.post_probe_distribution()
    rows = np.arange(n)
    combos = itertools.product([int(a) for a in TIE_BREAK], repeat=n)
    all_acts, all_gains = [], []
    while True:
        chunk = list(itertools.islice(combos, batch))
        if not chunk:
            break
        acts = np.array(chunk, dtype=int)
        chains = mdp.kernel[acts, rows[None, :], :]
        rew = mdp.rewards[rows[None, :], acts]
        all_acts.append(acts)
        all_gains.append(cesaro_gains(chains, rew, mu))
    acts = np.concatenate(all_acts)
    gains = np.concatenate(all_gains)
    pick = int(np.flatnonzero(gains >= gains.max() - 1e-10)[0])
    policy = Policy.deterministic(PolicyKind.OPTIMAL, acts[pick], mdp.delta_max, mdp.num_channel_states,
                                  {"method": "brute-force", "policies": len(gains)})
    gain = evaluate_policy_exact(mdp, policy)
    policy.metadata["gain"] = gain
    return policy, gain


@dataclass(frozen=True)
class ThresholdRecord:
    last_state: int
    first_probe_age: Optional[int]
    actions_by_age: str

    @property
    def is_threshold(self) -> bool:
        return self.first_probe_age is not None


@dataclass(frozen=True)
class ThresholdSummary:
    records: tuple[ThresholdRecord, ...]

    def __getitem__(self, sigma: int) -> ThresholdRecord:
        return self.records[sigma]

    def __iter__(self):
        return iter(self.records)

    @property
    def first_probe_ages(self) -> dict[int, Optional[int]]:
        return {rec.last_state: rec.first_probe_age for rec in self.records}

    @property
    def is_threshold_type(self) -> bool:
        """Every last-observed state eventually leads to a probe."""
        return all(rec.is_threshold for rec in self.records)


def threshold_summary(policy: Policy, mdp: Optional[TruncatedMdp] = None) -> ThresholdSummary:
    if mdp is not None:
        _check_shape(mdp, policy)
    records = []
    for sigma in range(policy.num_states):
        letters = policy.letters(sigma)
        pos = letters.find(ActionKind.PROBE.letter)
        records.append(ThresholdRecord(sigma, pos + 1 if pos >= 0 else None, letters))
    return ThresholdSummary(tuple(records))


def reachable_states(mdp: TruncatedMdp, policy: Policy) -> np.ndarray:
    """Boolean mask of states reachable from the post-probe start law."""
    p, _ = induced_chain(mdp, policy)
    seen = mdp.post_probe_distribution() > 0
    frontier = seen.copy()
    while frontier.any():
        nxt = (p[frontier] > 0).any(axis=0) & ~seen
        seen |= nxt
        frontier = nxt
    return seen
