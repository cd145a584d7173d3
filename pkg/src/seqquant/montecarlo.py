"""Monte Carlo risk estimation, asymptotic risk formulas, and cost sweeps.

Risk estimates aggregate independent trials of the two-stage test; each
trial draws from its own random stream seeded by (master seed, state, trial
index), so results do not depend on execution order. The theoretical
formulas keep only the leading c|log c| term; the sweep exists to show the
finite-cost gap shrinking.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .engine import TestSpec, run_trial
from .errors import MissingConstantError, ZeroInformationError
from .models import Scenario
from .quantizer import info_number


@dataclass(frozen=True)
class RiskEstimate:
    """Aggregated simulation results for one cost value.

    ``decision_matrix[m, d]`` is the empirical probability of deciding d when
    m is true. The per-state risk is c * mean_n[m] plus the loss-weighted
    decision probabilities, and the average risk weighs states by the prior;
    both identities hold exactly by construction.
    """

    cost: float
    mean_n: np.ndarray
    se_n: np.ndarray
    err_prob: np.ndarray
    se_err: np.ndarray
    decision_matrix: np.ndarray
    risk_per_state: np.ndarray
    risk_avg: float
    trials: int
    seed: int


def estimate_risk(spec: TestSpec, s: Scenario, trials: int, seed: int,
                  raw_observations: bool = False) -> RiskEstimate:
    """Run ``trials`` independent trials per true state and aggregate risks."""
    if trials < 1:
        raise ValueError("at least one trial per state is required")
    mcount = s.count
    mean_n = np.empty(mcount)
    se_n = np.empty(mcount)
    decision_matrix = np.zeros((mcount, mcount))
    for m in range(mcount):
        lengths = np.empty(trials)
        for t in range(trials):
            stream = np.random.default_rng([seed, m, t])
            try:
                outcome = run_trial(spec, s, m, stream, raw_observations=raw_observations)
            except Exception as exc:
                exc.args = (f"{exc} (seed={seed}, state={m}, trial={t})",)
                raise
            lengths[t] = outcome.n
            decision_matrix[m, outcome.decision] += 1.0
        mean_n[m] = lengths.mean()
        se_n[m] = lengths.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
    decision_matrix /= trials
    err_prob = 1.0 - np.diag(decision_matrix)
    se_err = np.sqrt(err_prob * (1.0 - err_prob) / trials)
    risk_per_state = s.cost * mean_n + np.einsum("md,md->m", s.loss, decision_matrix)
    risk_avg = float(s.prior @ risk_per_state)
    return RiskEstimate(s.cost, mean_n, se_n, err_prob, se_err, decision_matrix,
                        risk_per_state, risk_avg, trials, seed)


def theoretical_risk(s: Scenario, info) -> float:
    """Leading-order risk c |log c| sum_m prior_m / info_m (vanishing terms dropped)."""
    info = np.asarray(info, dtype=float)
    if np.any(info <= 0.0):
        raise ZeroInformationError("all information numbers must be positive")
    return float(s.cost * abs(math.log(s.cost)) * float(np.sum(s.prior / info)))


def centralized_benchmark(s: Scenario, info, constant: float | None):
    """Benchmark risk of the best centralized test and the efficiency ratio.

    The leading constant of the centralized benchmark is scenario-specific
    and must be supplied (it is 2 for the unit-variance Gaussian triple).
    Returns ``(constant * c * |log c|, constant / sum_m prior_m / info_m)``;
    with the prior concentrated on the least-informative state the ratio
    reduces to constant * min(info).
    """
    if constant is None:
        raise MissingConstantError("centralized benchmark constant is not configured")
    info = np.asarray(info, dtype=float)
    if np.any(info <= 0.0):
        raise ZeroInformationError("all information numbers must be positive")
    bench = constant * s.cost * abs(math.log(s.cost))
    efficiency = constant / float(np.sum(s.prior / info))
    return bench, efficiency


@dataclass(frozen=True)
class SweepRow:
    cost: float
    estimate: RiskEstimate
    theory_risk: float
    centralized: float | None
    ratio: np.ndarray
    ratio_se: np.ndarray


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    info: np.ndarray
    seed: int

    def to_csv(self, config: dict | None = None) -> str:
        """Plot-ready CSV, one line per (cost, state); the resolved run
        configuration is embedded as a leading comment for auditability."""
        buf = io.StringIO()
        if config is not None:
            buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["c", "m", "mean_N", "se_N", "err_prob", "se_err",
                         "risk_m", "risk_avg", "theory_risk", "ratio_N"])
        for row in self.rows:
            est = row.estimate
            for m in range(len(est.mean_n)):
                writer.writerow([
                    f"{row.cost:.10g}", m,
                    f"{est.mean_n[m]:.10g}", f"{est.se_n[m]:.10g}",
                    f"{est.err_prob[m]:.10g}", f"{est.se_err[m]:.10g}",
                    f"{est.risk_per_state[m]:.10g}", f"{est.risk_avg:.10g}",
                    f"{row.theory_risk:.10g}", f"{row.ratio[m]:.10g}",
                ])
        return buf.getvalue()

    def to_json(self, config: dict | None = None) -> str:
        data = {"seed": self.seed, "info": self.info.tolist(), "rows": []}
        if config is not None:
            data["config"] = config
        for row in self.rows:
            est = row.estimate
            data["rows"].append({
                "c": row.cost,
                "mean_N": est.mean_n.tolist(),
                "se_N": est.se_n.tolist(),
                "err_prob": est.err_prob.tolist(),
                "se_err": est.se_err.tolist(),
                "decision_matrix": est.decision_matrix.tolist(),
                "risk_m": est.risk_per_state.tolist(),
                "risk_avg": est.risk_avg,
                "theory_risk": row.theory_risk,
                "centralized": row.centralized,
                "ratio_N": row.ratio.tolist(),
                "ratio_se": row.ratio_se.tolist(),
            })
        return json.dumps(data, indent=2, sort_keys=True)


def sweep(spec: TestSpec, s: Scenario, costs, trials: int, seed: int,
          info=None, centralized_constant: float | None = None) -> SweepResult:
    """Estimate risks across a strictly decreasing list of sampling costs.

    ``info`` defaults to the information numbers of the second-stage
    quantizers, which set the predicted leading-order sample sizes. Each row
    records the per-state ratio mean_N * info / |log c| that the theory
    drives to 1.
    """
    costs = [float(c) for c in costs]
    if not costs:
        raise ValueError("cost list must be non-empty")
    if any(b >= a for a, b in zip(costs, costs[1:])):
        raise ValueError("cost list must be strictly decreasing")
    if any(not (0.0 < c < math.exp(-2.0)) for c in costs):
        raise ValueError("costs must lie in (0, exp(-2)) so the stage-one rule is unclamped")
    h = s.hypotheses
    if info is None:
        info = np.array([info_number(spec.stage2[m], h, m) for m in range(h.count)])
    else:
        info = np.asarray(info, dtype=float)

    rows = []
    for c in costs:
        scen = replace(s, cost=c)
        est = estimate_risk(spec, scen, trials, seed)
        theory = theoretical_risk(scen, info)
        central = None
        if centralized_constant is not None:
            central, _ = centralized_benchmark(scen, info, centralized_constant)
        log_c = abs(math.log(c))
        ratio = est.mean_n * info / log_c
        ratio_se = est.se_n * info / log_c
        rows.append(SweepRow(c, est, theory, central, ratio, ratio_se))
    return SweepResult(tuple(rows), info, seed)
