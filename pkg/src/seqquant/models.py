"""Observation models: hypothesis sets, scenarios, and raw-data divergences.

A scenario bundles M candidate observation distributions with a decision loss
matrix, a prior, and a per-sample cost. Two built-in distribution families are
supported: Gaussian with known (possibly per-hypothesis) variance, and finite
alphabets sharing a common support. Everything here is an immutable value
object so scenarios can be shared freely across simulation workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import NonFiniteDivergenceError, UnsupportedFamilyError

_SIMPLEX_TOL = 1e-12
_MASS_TOL = 1e-6


@dataclass(frozen=True)
class Gaussian:
    """Normal observation density with known standard deviation."""

    mean: float
    stdev: float

    family = "gaussian"

    def __post_init__(self):
        if not (self.stdev > 0 and math.isfinite(self.stdev) and math.isfinite(self.mean)):
            raise ValueError(f"gaussian requires finite mean and stdev > 0, got "
                             f"mean={self.mean}, stdev={self.stdev}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.stdev
        return np.exp(-0.5 * z * z) / (self.stdev * math.sqrt(2.0 * math.pi))

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.stdev
        return -0.5 * z * z - math.log(self.stdev) - 0.5 * math.log(2.0 * math.pi)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / self.stdev)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise ValueError("quantile is defined on (0, 1)")
        return self.mean + self.stdev * ndtri(u)

    def interval_mass(self, lo: float, hi: float) -> float:
        """Probability of the open interval (lo, hi), accurate in both tails.

        When the interval sits entirely in the upper tail the mass is
        computed from survival functions via the z -> -z symmetry, so far
        tails keep full relative precision instead of cancelling against 1.
        """
        zlo = -math.inf if lo == -math.inf else (lo - self.mean) / self.stdev
        zhi = math.inf if hi == math.inf else (hi - self.mean) / self.stdev
        if zlo >= 0.0:
            return float(ndtr(-zlo) - (0.0 if zhi == math.inf else ndtr(-zhi)))
        return float((1.0 if zhi == math.inf else ndtr(zhi))
                     - (0.0 if zlo == -math.inf else ndtr(zlo)))

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.stdev, size)


@dataclass(frozen=True)
class FiniteAlphabet:
    """Discrete observation density on a fixed, strictly increasing support."""

    points: tuple
    masses: tuple

    family = "finite"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        ms = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)
        if len(pts) == 0 or len(pts) != len(ms):
            raise ValueError("points and masses must be non-empty and equally long")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("points must be strictly increasing")
        if any(m < 0 for m in ms) or abs(sum(ms) - 1.0) > 1e-9:
            raise ValueError("masses must be nonnegative and sum to 1")

    def _cum(self):
        return np.cumsum(self.masses)

    def pdf(self, x):
        idx = self._index_of(x)
        return self.masses[idx] if idx is not None else 0.0

    def logpdf(self, x):
        p = self.pdf(x)
        return math.log(p) if p > 0 else -math.inf

    def cdf(self, x):
        pts = np.asarray(self.points)
        idx = np.searchsorted(pts, np.asarray(x, dtype=float), side="right")
        cum = np.concatenate([[0.0], self._cum()])
        return cum[idx]

    def quantile(self, u):
        u = float(u)
        if not (0.0 < u <= 1.0):
            raise ValueError("quantile is defined on (0, 1]")
        idx = int(np.searchsorted(self._cum(), u, side="left"))
        return self.points[min(idx, len(self.points) - 1)]

    def interval_mass(self, lo: float, hi: float) -> float:
        """Total mass of the atoms strictly inside (lo, hi)."""
        pts = np.asarray(self.points)
        i = int(np.searchsorted(pts, lo, side="right")) if lo != -math.inf else 0
        j = int(np.searchsorted(pts, hi, side="left")) if hi != math.inf else len(pts)
        return float(sum(self.masses[i:j]))

    def sample(self, rng, size=None):
        idx = rng.choice(len(self.points), size=size, p=np.asarray(self.masses))
        return np.asarray(self.points)[idx]

    def _index_of(self, x):
        """Index of x in the support, or None if x is not an atom."""
        pts = self.points
        i = int(np.searchsorted(pts, x))
        if i < len(pts) and pts[i] == x:
            return i
        return None


Density = Union[Gaussian, FiniteAlphabet]


@dataclass(frozen=True)
class HypothesisSet:
    """The M candidate distributions for the raw sensor observation.

    All members must belong to one family; finite-alphabet members must share
    the same support so that subset quantizers are well defined across
    hypotheses.
    """

    densities: tuple
    labels: tuple = ()

    def __post_init__(self):
        dens = tuple(self.densities)
        object.__setattr__(self, "densities", dens)
        if len(dens) < 2:
            raise ValueError("a hypothesis set needs at least two hypotheses")
        fams = {d.family for d in dens}
        if len(fams) != 1:
            raise UnsupportedFamilyError(f"mixed distribution families: {sorted(fams)}")
        if self.family == "finite":
            supports = {d.points for d in dens}
            if len(supports) != 1:
                raise UnsupportedFamilyError("finite-alphabet hypotheses must share one support")
        labels = tuple(self.labels) or tuple(f"H{m}" for m in range(len(dens)))
        if len(labels) != len(dens):
            raise ValueError("labels must match the number of hypotheses")
        object.__setattr__(self, "labels", labels)
        for d in dens:
            if abs(_total_mass(d) - 1.0) > _MASS_TOL:
                raise ValueError(f"density {d} does not integrate to 1")

    @property
    def count(self):
        return len(self.densities)

    @property
    def family(self):
        return self.densities[0].family

    @property
    def alphabet(self):
        """Common support of a finite-alphabet set."""
        if self.family != "finite":
            raise UnsupportedFamilyError("only finite-alphabet sets have a common alphabet")
        return self.densities[0].points


def _total_mass(density):
    if density.family == "gaussian":
        lo = density.mean - 10.0 * density.stdev
        hi = density.mean + 10.0 * density.stdev
        return float(density.cdf(hi) - density.cdf(lo))
    return float(sum(density.masses))


@dataclass(frozen=True)
class Scenario:
    """A detection problem: hypotheses, decision losses, prior, sampling cost.

    Shape consistency is enforced here; semantic conditions (zero loss
    diagonal, simplex prior, finite pairwise divergences, ...) are reported by
    :func:`validate_scenario` so that deliberately broken scenarios can still
    be constructed and diagnosed.
    """

    hypotheses: HypothesisSet
    loss: np.ndarray
    prior: np.ndarray
    cost: float

    def __post_init__(self):
        m = self.hypotheses.count
        loss = np.array(self.loss, dtype=float)
        prior = np.array(self.prior, dtype=float)
        if loss.shape != (m, m):
            raise ValueError(f"loss matrix must be {m}x{m}, got {loss.shape}")
        if prior.shape != (m,):
            raise ValueError(f"prior must have length {m}, got {prior.shape}")
        loss.setflags(write=False)
        prior.setflags(write=False)
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "cost", float(self.cost))

    @property
    def count(self):
        return self.hypotheses.count


def raw_kl(h: HypothesisSet, m: int, m_prime: int) -> float:
    """K-L divergence between raw observation models m and m_prime, in nats.

    Uses the Gaussian closed form or direct summation over a finite alphabet.
    Raises :class:`NonFiniteDivergenceError` when the divergence is infinite
    (support of hypothesis m not contained in that of m_prime).
    """
    if not (0 <= m < h.count and 0 <= m_prime < h.count):
        raise IndexError("state index out of range")
    p, q = h.densities[m], h.densities[m_prime]
    if h.family == "gaussian":
        var_ratio = (p.stdev / q.stdev) ** 2
        return float(math.log(q.stdev / p.stdev)
                     + (var_ratio + ((p.mean - q.mean) / q.stdev) ** 2) / 2.0
                     - 0.5)
    total = 0.0
    for pm, qm in zip(p.masses, q.masses):
        if pm == 0.0:
            continue
        if qm == 0.0:
            raise NonFiniteDivergenceError(
                f"support of hypothesis {m} is not contained in that of {m_prime}")
        total += pm * math.log(pm / qm)
    return total


@dataclass(frozen=True)
class CheckResult:
    """One line of a validation report. passed=None means not verifiable."""

    name: str
    passed: bool | None
    detail: str = ""

    def line(self):
        tag = {True: "pass", False: "FAIL", None: "n/a "}[self.passed]
        return f"[{tag}] {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self):
        return all(c.passed is not False for c in self.checks)

    def failures(self):
        return [c for c in self.checks if c.passed is False]

    def __str__(self):
        return "\n".join(c.line() for c in self.checks)


def validate_scenario(s: Scenario) -> ValidationReport:
    """Check the regularity conditions a scenario must satisfy.

    Reported checks: finiteness of every pairwise raw divergence, zero loss
    diagonal with positive off-diagonal entries, simplex prior, positive
    sampling cost, and (for Gaussian families) that no nontrivial linear
    combination of the densities vanishes on a set of positive probability.
    The last condition holds for Gaussians with distinct parameters and is
    unverifiable for atomic families, where it is reported as n/a.
    """
    checks = []
    mcount = s.count

    bad_pairs = []
    for m in range(mcount):
        for mp in range(mcount):
            if m == mp:
                continue
            try:
                raw_kl(s.hypotheses, m, mp)
            except NonFiniteDivergenceError:
                bad_pairs.append((m, mp))
    checks.append(CheckResult(
        "pairwise_divergences_finite", not bad_pairs,
        "" if not bad_pairs else f"divergent pairs: {bad_pairs}"))

    diag = np.diag(s.loss)
    diag_ok = bool(np.all(diag == 0.0))
    checks.append(CheckResult(
        "loss_diagonal_zero", diag_ok,
        "" if diag_ok else f"nonzero diagonal at states {np.nonzero(diag)[0].tolist()}"))

    off = s.loss[~np.eye(mcount, dtype=bool)]
    off_ok = bool(np.all(off > 0.0))
    checks.append(CheckResult(
        "loss_offdiagonal_positive", off_ok,
        "" if off_ok else "some off-diagonal loss entries are not positive"))

    simplex_ok = bool(np.all(s.prior >= 0.0) and abs(float(s.prior.sum()) - 1.0) <= _SIMPLEX_TOL)
    checks.append(CheckResult(
        "prior_simplex", simplex_ok,
        "" if simplex_ok else f"prior sums to {float(s.prior.sum()):.12g}"))

    checks.append(CheckResult("cost_positive", s.cost > 0.0,
                              "" if s.cost > 0.0 else f"cost={s.cost}"))

    if s.hypotheses.family == "gaussian":
        params = [(d.mean, d.stdev) for d in s.hypotheses.densities]
        distinct = len(set(params)) == len(params)
        checks.append(CheckResult(
            "quantizer_regularity", distinct,
            "" if distinct else "duplicated gaussian hypotheses"))
    else:
        checks.append(CheckResult(
            "quantizer_regularity", None,
            "not verifiable for atomic distributions"))

    return ValidationReport(tuple(checks))
