"""Two-stage sequential test driven by one-bit sensor messages.

Stage one runs a fixed quantizer until the posterior of some state clears
1 - u(c); that state becomes the preliminary decision and selects the
second-stage quantizer. Stage two then runs the per-state (possibly
randomized) quantizer until the posterior expected-loss ratio of some state
exceeds 1/c. The fusion side always knows which deterministic component
produced each bit, either because it draws the component itself and feeds the
choice back, or because the sensor follows a fixed block schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    HorizonExceededError,
    NonIntegerBlockCountsError,
    UninformativeStageOneError,
    ZeroLikelihoodError,
)
from .models import HypothesisSet, Scenario
from .quantizer import (
    DeterministicQuantizer,
    RandomizedQuantizer,
    induced_bernoulli,
    kl_pair,
    quantize,
)

DEFAULT_HORIZON = 10 ** 7
_U_CLAMP = 0.49


def stage_one_threshold(cost: float, u_fixed: float | None = None) -> float:
    """The stage-one posterior target is 1 - u(c), with u(c) = 1/|log c|
    clamped below 1/2 so the rule stays meaningful at moderate costs."""
    if u_fixed is not None:
        return 1.0 - u_fixed
    log_c = abs(math.log(cost))
    u = _U_CLAMP if log_c == 0.0 else min(_U_CLAMP, 1.0 / log_c)
    return 1.0 - u


@dataclass(frozen=True)
class TestSpec:
    """Static description of the two-stage test.

    ``stage2[m]`` is used when the preliminary decision is m. The posterior
    either restarts from the prior at the stage switch (default) or carries
    over the stage-one posterior. Randomization is resolved either by the
    fusion side drawing a component each step (``fusion``) or by a fixed
    ``block`` schedule of length ``block_b``. Build through
    :meth:`TestSpec.build`, which checks that the stage-one quantizer
    separates every pair of hypotheses.
    """

    stage1: DeterministicQuantizer
    stage2: tuple
    u_fixed: float | None = None
    reset_to_prior: bool = True
    randomization: str = "fusion"
    block_b: int | None = None
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        object.__setattr__(self, "stage2", tuple(self.stage2))
        if self.randomization not in ("fusion", "block"):
            raise ValueError("randomization must be 'fusion' or 'block'")
        if self.u_fixed is not None and not (0.0 < self.u_fixed < 0.5):
            raise ValueError("u must lie in (0, 1/2)")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    @classmethod
    def build(cls, h: HypothesisSet, stage1: DeterministicQuantizer,
              stage2, **kwargs) -> "TestSpec":
        stage2 = tuple(
            q if isinstance(q, RandomizedQuantizer) else RandomizedQuantizer.pure(q)
            for q in stage2)
        if len(stage2) != h.count:
            raise ValueError("one second-stage quantizer per hypothesis is required")
        for m in range(h.count):
            for mp in range(h.count):
                if m != mp and kl_pair(stage1, h, m, mp) <= 0.0:
                    raise UninformativeStageOneError(
                        f"stage-one quantizer cannot separate states {m} and {mp}")
        spec = cls(stage1=stage1, stage2=stage2, **kwargs)
        if spec.randomization == "block":
            if spec.block_b is None:
                raise ValueError("block randomization needs block_b")
            for q in stage2:
                block_schedule(q.weights, spec.block_b)
        return spec


@dataclass(frozen=True)
class PosteriorState:
    """Posterior over the M hypotheses after n messages."""

    probs: np.ndarray
    n: int = 0

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError("posterior must be a probability vector")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class StageOneResult:
    n0: int
    d0: int
    posterior: PosteriorState


@dataclass(frozen=True)
class StopDiagnostics:
    """Per-state stopping quantities for the second-stage rule.

    ``r[m]`` is the posterior expected loss of deciding m now; ``r_prime[m]``
    is the cheapest loss available when m is true but another decision is
    made. The flag for m is set when r_prime/r strictly exceeds 1/c, with 0/0
    treated as no-stop.
    """

    r: np.ndarray
    r_prime: np.ndarray
    flags: np.ndarray


@dataclass(frozen=True)
class StepRecord:
    step: int
    stage: int
    component: int | None
    bit: int
    posterior: tuple
    feedback: int | None = None


@dataclass(frozen=True)
class TrialOutcome:
    n: int
    decision: int
    n0: int
    d0: int
    transcript: tuple | None = None


def posterior_update(state: PosteriorState, component: DeterministicQuantizer,
                     bit: int, h: HypothesisSet) -> PosteriorState:
    """Bayes update of the posterior for one bit from a known component."""
    likes = np.array([induced_bernoulli(component, h, m) for m in range(h.count)])
    if not bit:
        likes = 1.0 - likes
    return PosteriorState(_bayes_step(state.probs, likes), state.n + 1)


def _bayes_step(probs: np.ndarray, likes: np.ndarray) -> np.ndarray:
    new = probs * likes
    total = new.sum()
    if total <= 0.0:
        raise ZeroLikelihoodError("observed bit has probability zero under every state")
    return new / total


def stop_diagnostics(state: PosteriorState, s: Scenario) -> StopDiagnostics:
    probs = state.probs
    r = s.loss.T @ probs
    off = s.loss + np.where(np.eye(s.count, dtype=bool), np.inf, 0.0)
    r_prime = probs * off.min(axis=1)
    flags = s.cost * r_prime > r
    return StopDiagnostics(r, r_prime, flags)


def run_stage_one(spec: TestSpec, s: Scenario, bits) -> StageOneResult:
    """Drive the stage-one rule over an iterable of bits.

    At least one bit is always consumed; stopping compares the running
    maximum posterior against the threshold with >= and breaks ties by the
    smallest state index.
    """
    h = s.hypotheses
    threshold = stage_one_threshold(s.cost, spec.u_fixed)
    likes1 = _bit_likelihoods(spec.stage1, h)
    probs = np.array(s.prior, dtype=float)
    n = 0
    for bit in bits:
        probs = _bayes_step(probs, likes1[int(bit)])
        n += 1
        if probs.max() >= threshold:
            return StageOneResult(n, int(np.argmax(probs)), PosteriorState(probs, n))
        if n >= spec.horizon:
            break
    raise HorizonExceededError(
        f"stage one did not reach the posterior threshold within {n} steps")


def _bit_likelihoods(component: DeterministicQuantizer, h: HypothesisSet):
    p = np.array([induced_bernoulli(component, h, m) for m in range(h.count)])
    return (1.0 - p, p)


def block_schedule(weights, b: int) -> list:
    """Deterministic component order for one block of b observations.

    Component j occupies exactly b * weights[j] slots (an error is raised if
    that is not an integer within 1e-9). Slots are assigned greedily to the
    component with the largest remaining quota deficit, ties to the smallest
    index, so mixtures interleave instead of running in contiguous runs.
    """
    weights = np.asarray(weights, dtype=float)
    if b < 1:
        raise ValueError("block length must be positive")
    counts = weights * b
    rounded = np.rint(counts)
    if np.any(np.abs(counts - rounded) > 1e-9):
        raise NonIntegerBlockCountsError(
            f"block length {b} is not a common denominator of weights {weights.tolist()}")
    counts = rounded.astype(int)
    placed = np.zeros(len(weights), dtype=int)
    order = []
    for t in range(1, b + 1):
        deficit = counts * (t / b) - placed
        deficit[placed >= counts] = -np.inf
        j = int(np.argmax(deficit))
        order.append(j)
        placed[j] += 1
    return order


def run_trial(spec: TestSpec, s: Scenario, true_state: int, rng,
              record: bool = False, raw_observations: bool = False) -> TrialOutcome:
    """Simulate one full run of the two-stage test under a given true state.

    Bits are drawn from the induced message distributions by default; with
    ``raw_observations`` the raw observation is sampled and quantized instead
    (slower, used to cross-validate the induced laws). The second-stage
    stopping rule is evaluated at the stage switch and after every update;
    when several states flag simultaneously the one with the smallest
    posterior expected loss wins, ties to the smallest index.
    """
    rng = _as_generator(rng)
    h = s.hypotheses
    mcount = h.count
    threshold = stage_one_threshold(s.cost, spec.u_fixed)
    transcript = [] if record else None

    wt = s.loss.T.copy()
    off = s.loss + np.where(np.eye(mcount, dtype=bool), np.inf, 0.0)
    w_min = off.min(axis=1)
    cost = s.cost

    # stage one
    likes1 = _bit_likelihoods(spec.stage1, h)
    p1_true = likes1[1][true_state]
    density = h.densities[true_state]
    probs = np.array(s.prior, dtype=float)
    n = 0
    while True:
        if n >= spec.horizon:
            raise HorizonExceededError(f"no stage-one decision after {n} steps")
        if raw_observations:
            bit = quantize(spec.stage1, float(density.sample(rng)))
        else:
            bit = 1 if rng.random() < p1_true else 0
        probs = _bayes_step(probs, likes1[bit])
        n += 1
        if record:
            transcript.append(StepRecord(n, 1, None, bit, tuple(probs)))
        if probs.max() >= threshold:
            break
    n0 = n
    d0 = int(np.argmax(probs))

    # stage switch
    mix = spec.stage2[d0]
    comp_likes = [_bit_likelihoods(c, h) for c in mix.components]
    comp_p_true = [likes[1][true_state] for likes in comp_likes]
    weights = np.asarray(mix.weights)
    cum_weights = np.cumsum(weights)
    schedule = (block_schedule(weights, spec.block_b)
                if spec.randomization == "block" else None)
    if spec.reset_to_prior:
        probs = np.array(s.prior, dtype=float)

    while True:
        r = wt @ probs
        r_prime = probs * w_min
        flags = cost * r_prime > r
        if flags.any():
            flagged = np.nonzero(flags)[0]
            decision = int(flagged[np.lexsort((flagged, r[flagged]))[0]])
            return TrialOutcome(n, decision, n0, d0,
                                tuple(transcript) if record else None)
        if n >= spec.horizon:
            raise HorizonExceededError(f"no final decision after {n} steps")

        if schedule is not None:
            j = schedule[(n - n0) % len(schedule)]
        elif len(mix.components) == 1:
            j = 0
        else:
            j = int(np.searchsorted(cum_weights, rng.random(), side="right"))
            j = min(j, len(mix.components) - 1)
        if raw_observations:
            bit = quantize(mix.components[j], float(density.sample(rng)))
        else:
            bit = 1 if rng.random() < comp_p_true[j] else 0
        probs = _bayes_step(probs, comp_likes[j][bit])
        n += 1
        if record:
            feedback = j if spec.randomization == "fusion" else None
            transcript.append(StepRecord(n, 2, j, bit, tuple(probs), feedback))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
