"""CSV serialization for curves, policies, solver reports and comparisons.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so files are byte-stable and lossless.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from aocsi.belief import AgeCurveTable
from aocsi.mdp import Policy, PolicyKind, SolveReport, ThresholdSummary
from aocsi.reward import ActionKind
from aocsi.simulator import ComparisonRow

DETERMINISTIC_POLICY_HEADER = ("delta", "last_state", "action")
STOCHASTIC_POLICY_HEADER = ("delta", "last_state", "p_idle", "p_probe", "p_transmit")
SOLVE_REPORT_HEADER = ("gain", "iterations", "residual", "converged", "thresholds")
THRESHOLDS_HEADER = ("policy", "last_state", "first_probe_age", "actions")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return "none"
    return str(value)


def render(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def curves_csv(table: AgeCurveTable) -> str:
    return render(AgeCurveTable.CSV_HEADER, table.rows)


def policy_csv(policy: Policy) -> str:
    m = policy.num_states
    keys = [(age, s) for age in range(1, policy.delta_max + 1) for s in range(m)]
    if policy.is_deterministic:
        acts = policy.actions
        return render(DETERMINISTIC_POLICY_HEADER,
                      ((age, s, ActionKind(int(a)).letter) for (age, s), a in zip(keys, acts)))
    return render(STOCHASTIC_POLICY_HEADER,
                  ((age, s, *map(float, probs)) for (age, s), probs in zip(keys, policy.table)))


def parse_policy_csv(text: str, kind: PolicyKind = PolicyKind.CUSTOM) -> Policy:
    """Inverse of :func:`policy_csv`; every ``(delta, last_state)`` must appear once."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    rows = [r for r in reader if r]
    if header not in (DETERMINISTIC_POLICY_HEADER, STOCHASTIC_POLICY_HEADER):
        raise ValueError(f"unrecognized policy header {header}")
    keyed = {}
    for row in rows:
        key = (int(row[0]), int(row[1]))
        if key in keyed:
            raise ValueError(f"duplicate policy row for state {key}")
        if header == DETERMINISTIC_POLICY_HEADER:
            probs = np.zeros(3)
            probs[ActionKind.from_letter(row[2])] = 1.0
        else:
            probs = np.array([float(x) for x in row[2:5]])
        keyed[key] = probs
    delta_max = max(k[0] for k in keyed)
    m = max(k[1] for k in keyed) + 1
    missing = [(a, s) for a in range(1, delta_max + 1) for s in range(m) if (a, s) not in keyed]
    if missing:
        raise ValueError(f"policy is missing states {missing[:5]}")
    table = np.array([keyed[(a, s)] for a in range(1, delta_max + 1) for s in range(m)])
    return Policy(kind, table, delta_max, m)


def _thresholds_cell(summary: ThresholdSummary) -> str:
    return ";".join(fmt(rec.first_probe_age) for rec in summary)


def solve_report_csv(report: SolveReport, summary: ThresholdSummary) -> str:
    return render(SOLVE_REPORT_HEADER, [(report.gain, report.iterations, report.final_residual,
                                         report.converged, _thresholds_cell(summary))])


def thresholds_csv(summaries: Sequence[tuple[str, ThresholdSummary]]) -> str:
    rows = []
    for label, summary in summaries:
        for rec in summary:
            rows.append((label, rec.last_state, rec.first_probe_age, rec.actions_by_age))
    return render(THRESHOLDS_HEADER, rows)


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    return render(ComparisonRow.CSV_HEADER, (dataclasses.astuple(r) for r in rows))


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def parse_optional_int(cell: str) -> Optional[int]:
    return None if cell == "none" else int(cell)
