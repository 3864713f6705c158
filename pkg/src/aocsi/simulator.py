"""Monte Carlo execution of a policy against the hidden channel.

Random numbers come from numpy's PCG64 seeded with the 64-bit
``SimConfig.seed``; there is no global RNG state.  A run consists of
``replications`` independent episodes of ``horizon // replications`` slots.
Each episode draws two uniforms (the state seen by the bootstrap probe and
the state one slot later), then processes its slots in blocks; each block
draws, in this order, one uniform per slot for the channel step, one for the
transmission outcome and one for action sampling, whether or not the slot
needs it.  A report is therefore a pure function of (seed, config, policy,
model).

Rewards are not summed slot by slot.  The kernel counts post-warmup
outcomes ``(belief state, action, true state, success)`` and the average is
formed once from those counts, which keeps constant-reward policies exact.

With a single episode the confidence interval treats per-slot rewards as
independent (serial correlation makes it optimistic).  With several
episodes it is computed from the spread of episode means, which also
covers policies whose long-run average depends on the start state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from aocsi.belief import _age_moments
from aocsi.channel import ChannelModel, steady_state
from aocsi.errors import PolicyStateMissing
from aocsi.mdp import Policy, PolicyKind, TruncatedMdp, build_mdp, evaluate_policy_exact
from aocsi.reward import ActionKind, RewardParams

BLOCK = 1 << 20
Z95 = 1.959963984540054
SEED_MASK = (1 << 64) - 1


class Accounting(enum.Enum):
    EXPECTED = "expected"
    REALIZED = "realized"


@dataclass(frozen=True)
class SimConfig:
    horizon: int
    seed: int = 0
    warmup: int = 0
    accounting: Accounting = Accounting.EXPECTED
    replications: int = 1

    def __post_init__(self):
        object.__setattr__(self, "accounting", Accounting(self.accounting))
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.replications < 1 or self.horizon % self.replications:
            raise ValueError(
                f"replications ({self.replications}) must be positive and divide the horizon ({self.horizon})"
            )
        if self.warmup < 0 or self.warmup >= self.episode_length:
            raise ValueError(
                f"need 0 <= warmup < horizon / replications, got warmup={self.warmup}"
            )
        if not 0 <= self.seed <= SEED_MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def episode_length(self) -> int:
        return self.horizon // self.replications


@dataclass(frozen=True)
class SimReport:
    average_reward: float
    ci_halfwidth: float
    action_counts: dict
    transmit_success_rate: float
    aocsi_histogram: np.ndarray  # index k counts decision epochs with age k + 1
    transmit_attempts: np.ndarray  # per belief state index
    transmit_successes: np.ndarray
    samples: int  # slots entering the average

    @property
    def std_error(self) -> float:
        return self.ci_halfwidth / Z95


@numba.njit(cache=True)
def _run_block(u_chan, u_tx, u_act, start, warmup, state, cum_p, rel, cum_pol, deterministic,
               det_actions, m, delta_max, counts, hist, tx_att, tx_suc, outcomes):
    age, sigma, s = state[0], state[1], state[2]
    for k in range(u_chan.shape[0]):
        i = (age - 1) * m + sigma
        if deterministic:
            a = det_actions[i]
        else:
            a = 2
            for j in range(2):
                if u_act[k] < cum_pol[i, j]:
                    a = j
                    break
        counts[a] += 1
        hist[age - 1] += 1
        success = 1 if u_tx[k] < rel[s] else 0
        if a == 2:
            tx_att[i] += 1
            tx_suc[i] += success
        if start + k >= warmup:
            outcomes[i, a, s, success] += 1
        if a == 1:
            age = 1
            sigma = s
        elif age < delta_max:
            age += 1
        row = cum_p[s]
        nxt = m - 1
        for j in range(m - 1):
            if u_chan[k] < row[j]:
                nxt = j
                break
        s = nxt
    state[0], state[1], state[2] = age, sigma, s


def outcome_values(mdp: TruncatedMdp, accounting: Accounting) -> np.ndarray:
    """Per-slot reward for each ``(belief state, action, true state, success)``."""
    model, params = mdp.model, mdp.params
    n, m = mdp.num_states, model.num_states
    values = np.empty((n, 3, m, 2))
    if accounting is Accounting.EXPECTED:
        values[:] = mdp.rewards[:, :, None, None]
        return values
    r_hat = np.concatenate([_age_moments(model, age)[0] for age in range(1, mdp.delta_max + 1)])
    err2 = (model.reliability[None, :] - r_hat[:, None]) ** 2  # (state, true state)
    values[:, ActionKind.IDLE] = -params.beta * err2[:, :, None]
    values[:, ActionKind.PROBE] = -params.beta * params.eps_c
    gain = np.array([params.r_fail, params.r_suc]) - params.eps_t
    values[:, ActionKind.TRANSMIT] = gain[None, None, :] - params.beta * err2[:, :, None]
    return values


def _moments(outcomes: np.ndarray, values: np.ndarray) -> tuple[float, float, int]:
    """Mean and unbiased variance of the rewards described by outcome counts."""
    total = int(outcomes.sum())
    nz = np.flatnonzero(outcomes)
    c = outcomes.ravel()[nz]
    v = values.ravel()[nz]
    mean = math.fsum((ci / total) * vi for ci, vi in zip(c.tolist(), v.tolist()))
    if total < 2:
        return mean, math.inf, total
    var = math.fsum((ci / total) * (vi - mean) ** 2 for ci, vi in zip(c.tolist(), v.tolist()))
    return mean, var * total / (total - 1), total


def _sample(cum: np.ndarray, u: float) -> int:
    return int(min(np.searchsorted(cum, u, side="right"), cum.size - 1))


def run_simulation(model: ChannelModel, params: RewardParams, policy: Policy, sim: SimConfig,
                   mdp: Optional[TruncatedMdp] = None) -> SimReport:
    m = model.num_states
    dmax = policy.delta_max
    if policy.num_states != m:
        raise PolicyStateMissing(f"policy is defined for {policy.num_states} channel states, model has {m}")
    if mdp is None or mdp.model is not model or mdp.params != params or mdp.delta_max != dmax:
        mdp = build_mdp(model, params, dmax)
    n = mdp.num_states
    cum_p = np.cumsum(model.transition, axis=1)
    cum_pi = np.cumsum(steady_state(model))
    cum_pol = np.cumsum(policy.table, axis=1)
    deterministic = policy.is_deterministic
    det_actions = policy.table.argmax(axis=1).astype(np.int64)
    values = outcome_values(mdp, sim.accounting)

    rng = np.random.Generator(np.random.PCG64(sim.seed))
    counts = np.zeros(3, dtype=np.int64)
    hist = np.zeros(dmax, dtype=np.int64)
    tx_att = np.zeros(n, dtype=np.int64)
    tx_suc = np.zeros(n, dtype=np.int64)
    pooled = np.zeros((n, 3, m, 2), dtype=np.int64)
    episode_means = []
    for _ in range(sim.replications):
        u0 = rng.random(2)
        probed = _sample(cum_pi, u0[0])
        state = np.array([1, probed, _sample(cum_p[probed], u0[1])], dtype=np.int64)
        outcomes = np.zeros_like(pooled)
        done = 0
        while done < sim.episode_length:
            size = min(BLOCK, sim.episode_length - done)
            u_chan = rng.random(size)
            u_tx = rng.random(size)
            u_act = rng.random(size)
            _run_block(u_chan, u_tx, u_act, done, sim.warmup, state, cum_p, model.reliability, cum_pol,
                       deterministic, det_actions, m, dmax, counts, hist, tx_att, tx_suc, outcomes)
            done += size
        pooled += outcomes
        if sim.replications > 1:
            episode_means.append(_moments(outcomes, values)[0])

    mean, var, samples = _moments(pooled, values)
    if sim.replications > 1:
        spread = np.std(episode_means, ddof=1)
        half = Z95 * float(spread) / math.sqrt(sim.replications)
    else:
        half = Z95 * math.sqrt(var / samples)
    attempts = int(tx_att.sum())
    return SimReport(
        average_reward=mean,
        ci_halfwidth=float(half),
        action_counts={a: int(counts[a]) for a in ActionKind},
        transmit_success_rate=float(tx_suc.sum() / attempts) if attempts else 0.0,
        aocsi_histogram=hist,
        transmit_attempts=tx_att,
        transmit_successes=tx_suc,
        samples=samples,
    )


@dataclass(frozen=True)
class ComparisonRow:
    policy: str
    avg_reward: float
    ci_halfwidth: float
    exact_gain: float
    n_idle: int
    n_probe: int
    n_transmit: int
    success_rate: float

    CSV_HEADER = ("policy", "avg_reward", "ci_halfwidth", "exact_gain", "n_idle", "n_probe",
                  "n_transmit", "success_rate")


def derived_seed(seed: int, index: int) -> int:
    """Seed for the ``index``-th policy of a comparison: ``(seed + index) mod 2**64``."""
    return (seed + index) & SEED_MASK


def policy_label(policy: Policy) -> str:
    if policy.kind is PolicyKind.CUSTOM:
        return str(policy.metadata.get("label", "custom"))
    return policy.kind.value


def report_row(label: str, report: SimReport, exact_gain: float) -> ComparisonRow:
    c = report.action_counts
    return ComparisonRow(label, report.average_reward, report.ci_halfwidth, exact_gain,
                         c[ActionKind.IDLE], c[ActionKind.PROBE], c[ActionKind.TRANSMIT],
                         report.transmit_success_rate)


def compare_policies(model: ChannelModel, params: RewardParams, policies: Sequence[Policy], sim: SimConfig,
                     mdp: Optional[TruncatedMdp] = None) -> list[ComparisonRow]:
    if not policies:
        return []
    shapes = {(p.delta_max, p.num_states) for p in policies}
    if len(shapes) != 1:
        raise ValueError(f"policies disagree on the MDP shape: {sorted(shapes)}")
    if mdp is None:
        mdp = build_mdp(model, params, policies[0].delta_max)
    rows = []
    for idx, policy in enumerate(policies):
        run = SimConfig(sim.horizon, derived_seed(sim.seed, idx), sim.warmup, sim.accounting, sim.replications)
        report = run_simulation(model, params, policy, run, mdp)
        rows.append(report_row(policy_label(policy), report, evaluate_policy_exact(mdp, policy)))
    return rows
