"""Binary quantizers and their induced message statistics.

A deterministic quantizer maps a raw observation to one bit. For continuous
families it is represented by its acceptance region, a finite union of
intervals; the unambiguous likelihood quantizer (ULQ) form takes the region
where a fixed linear combination of the hypothesis densities is positive.
Finite-alphabet quantizers are subset bitmasks over the common support.
Randomized quantizers are probability-weighted mixtures of deterministic
ones, and their divergences are the weight-averaged component divergences
(the fusion side always learns which component produced a given bit).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRegionError, UnsupportedFamilyError
from .models import HypothesisSet

INF = math.inf


def canonical_coeffs(a) -> np.ndarray:
    """Scale a coefficient vector to unit Euclidean norm.

    Only positive rescaling is quotiented: a and -a describe complementary
    acceptance regions and stay distinct.
    """
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0.0 or not np.all(np.isfinite(a)):
        raise ValueError("coefficient vector must be finite and not all zero")
    out = a / norm
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Region:
    """Ordered union of disjoint open intervals on the extended real line."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in ivs:
            if not lo < hi:
                raise ValueError(f"empty or inverted interval ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
            if not hi <= lo:
                raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    def contains(self, x: float) -> bool:
        """Membership test; boundaries are excluded (strict inequalities)."""
        x = float(x)
        i = bisect_right(self.intervals, (x, INF)) - 1
        return i >= 0 and self.intervals[i][0] < x < self.intervals[i][1]

    def complement(self) -> tuple:
        """Intervals of the complement, ignoring boundary points."""
        if not self.intervals:
            return ((-INF, INF),)
        out = []
        prev = -INF
        for lo, hi in self.intervals:
            if prev < lo:
                out.append((prev, lo))
            prev = hi
        if prev < INF:
            out.append((prev, INF))
        return tuple(out)

    @property
    def is_empty(self):
        return not self.intervals

    def close_to(self, other: "Region", tol: float = 1e-9) -> bool:
        if len(self.intervals) != len(other.intervals):
            return False
        for (a, b), (c, d) in zip(self.intervals, other.intervals):
            if not (_end_close(a, c, tol) and _end_close(b, d, tol)):
                return False
        return True


def _end_close(a, b, tol):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


FULL_LINE = Region(((-INF, INF),))
EMPTY_REGION = Region(())


@dataclass(frozen=True)
class DeterministicQuantizer:
    """One-bit quantizer: interval region (continuous) or support bitmask (finite).

    Exactly one of ``region`` and ``mask`` is set. ``coeffs`` records the ULQ
    coefficient vector when the region came from one.
    """

    region: Region | None = None
    mask: tuple | None = None
    points: tuple | None = None
    coeffs: np.ndarray | None = None

    def __post_init__(self):
        if (self.region is None) == (self.mask is None):
            raise ValueError("exactly one of region and mask must be given")
        if self.mask is not None:
            mask = tuple(int(b) for b in self.mask)
            if self.points is None or len(self.points) != len(mask):
                raise ValueError("a mask quantizer needs matching alphabet points")
            if any(b not in (0, 1) for b in mask):
                raise ValueError("mask entries must be bits")
            object.__setattr__(self, "mask", mask)
            object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", canonical_coeffs(self.coeffs))

    def signature(self, tol_decimals: int = 9):
        """Hashable identity used for deduplication and mixture uniqueness."""
        if self.mask is not None:
            return ("mask", self.mask)
        return ("region", tuple((round(lo, tol_decimals), round(hi, tol_decimals))
                                for lo, hi in self.region.intervals))


@dataclass(frozen=True)
class RandomizedQuantizer:
    """Finite mixture of deterministic quantizers with simplex weights."""

    components: tuple
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        w = np.array(self.weights, dtype=float)
        if len(comps) == 0 or w.shape != (len(comps),):
            raise ValueError("components and weights must be non-empty and equally long")
        if np.any(w < 0.0) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        sigs = [c.signature() for c in comps]
        if len(set(sigs)) != len(sigs):
            raise ValueError("mixture components must be distinct")
        w.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @classmethod
    def pure(cls, q: DeterministicQuantizer) -> "RandomizedQuantizer":
        return cls((q,), np.array([1.0]))

    @property
    def is_deterministic(self):
        return len(self.components) == 1


@dataclass(frozen=True)
class RootFindConfig:
    """Controls the sign scan and bisection used to extract ULQ regions."""

    scan_points: int = 10_000
    root_tol: float = 1e-10
    bracket_sigmas: float = 10.0


def scan_bracket(h: HypothesisSet, cfg: RootFindConfig) -> tuple:
    means = [d.mean for d in h.densities]
    smax = max(d.stdev for d in h.densities)
    return (min(means) - cfg.bracket_sigmas * smax,
            max(means) + cfg.bracket_sigmas * smax)


def _combo(a, h, x):
    """Evaluate sum_m a[m] * f_m(x) for scalar or vector x."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for am, d in zip(a, h.densities):
        if am != 0.0:
            total = total + am * d.pdf(x)
    return total


def ulq_region(a, h: HypothesisSet, cfg: RootFindConfig = RootFindConfig()) -> Region:
    """Positivity region of the density combination defined by coefficients a.

    The bracket [min mean - k*sigma, max mean + k*sigma] is scanned on a
    uniform grid; each sign change is refined by bisection down to
    ``cfg.root_tol`` and the outermost intervals are extended to +-infinity
    according to the sign of the combination at the bracket ends. Raises
    :class:`DegenerateRegionError` when the combination is nonpositive on the
    whole bracket (a constant-zero quantizer).
    """
    if h.family != "gaussian":
        raise UnsupportedFamilyError("ULQ regions are only defined for continuous families")
    a = canonical_coeffs(a)
    if len(a) != h.count:
        raise ValueError("coefficient vector length must match the number of hypotheses")
    lo, hi = scan_bracket(h, cfg)
    xs = np.linspace(lo, hi, cfg.scan_points)
    g = _combo(a, h, xs)
    pos = g > 0.0
    change = np.nonzero(pos[1:] != pos[:-1])[0]

    if change.size == 0:
        if not pos[0]:
            raise DegenerateRegionError(
                "density combination is nonpositive on the whole bracket")
        return FULL_LINE

    roots = []
    for i in change:
        xlo, xhi = xs[i], xs[i + 1]
        glo = g[i]
        while xhi - xlo > cfg.root_tol:
            mid = 0.5 * (xlo + xhi)
            gm = float(_combo(a, h, mid))
            if (glo > 0.0) != (gm > 0.0):
                xhi = mid
            else:
                xlo, glo = mid, gm
        roots.append(0.5 * (xlo + xhi))

    return _region_from_roots(roots, bool(pos[0]), bool(pos[-1]))


def _region_from_roots(roots, pos_left: bool, pos_right: bool) -> Region:
    """Assemble the positivity region from sorted roots and bracket-end signs.

    The sign alternates at each root, so the positive stretches are the
    even-indexed gaps of the point sequence, starting at -infinity when the
    left bracket end is positive.
    """
    pts = ([-INF] if pos_left else []) + list(roots) + [INF]
    intervals = tuple((pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2))
    assert intervals and math.isinf(intervals[-1][1]) == pos_right
    return Region(intervals)


def quantize(q: DeterministicQuantizer, x: float) -> int:
    """Apply the quantizer to one raw observation."""
    if q.mask is not None:
        i = bisect_right(q.points, x) - 1
        if i < 0 or q.points[i] != x:
            raise ValueError(f"observation {x} is not an alphabet point")
        return q.mask[i]
    return int(q.region.contains(x))


def quantize_many(q: DeterministicQuantizer, xs) -> np.ndarray:
    """Vectorized :func:`quantize` over an array of observations."""
    xs = np.asarray(xs, dtype=float)
    if q.mask is not None:
        pts = np.asarray(q.points)
        idx = np.searchsorted(pts, xs)
        idx = np.clip(idx, 0, len(pts) - 1)
        if not np.all(pts[idx] == xs):
            raise ValueError("some observations are not alphabet points")
        return np.asarray(q.mask)[idx]
    out = np.zeros(xs.shape, dtype=int)
    for lo, hi in q.region.intervals:
        out |= (xs > lo) & (xs < hi)
    return out


def induced_pair(q: DeterministicQuantizer, h: HypothesisSet, m: int) -> tuple:
    """Message law of the quantizer under hypothesis m as (P[bit=1], P[bit=0]).

    Both sides are accumulated from their own interval (or atom) masses and
    normalized by the total, so a side is exactly zero only when it truly
    carries no mass; the near-one side never swallows a tiny complement
    through rounding. Divergence computations rely on this.
    """
    d = h.densities[m]
    if q.mask is not None:
        if h.family != "finite" or h.alphabet != q.points:
            raise UnsupportedFamilyError("mask quantizer does not match the hypothesis alphabet")
        one = sum(mass for bit, mass in zip(q.mask, d.masses) if bit)
        zero = sum(mass for bit, mass in zip(q.mask, d.masses) if not bit)
    else:
        one = sum(d.interval_mass(lo, hi) for lo, hi in q.region.intervals)
        zero = sum(d.interval_mass(lo, hi) for lo, hi in q.region.complement())
    total = one + zero
    return float(one / total), float(zero / total)


def induced_bernoulli(q: DeterministicQuantizer, h: HypothesisSet, m: int) -> float:
    """Probability that the quantized message is 1 under hypothesis m."""
    return induced_pair(q, h, m)[0]


def _kl_two_sided(p_one, p_zero, q_one, q_zero) -> float:
    total = 0.0
    if p_one > 0.0:
        if q_one == 0.0:
            return INF
        total += p_one * math.log(p_one / q_one)
    if p_zero > 0.0:
        if q_zero == 0.0:
            return INF
        total += p_zero * math.log(p_zero / q_zero)
    # rounding can push the sum a few ulp below zero when the laws coincide
    return max(total, 0.0)


def bernoulli_kl(p: float, q: float) -> float:
    """K-L divergence between Bernoulli(p) and Bernoulli(q) in nats.

    Uses the 0*log(0) = 0 convention; returns +inf when q is degenerate at a
    value that p can leave (one message is impossible under q but not under p).
    """
    return _kl_two_sided(p, 1.0 - p, q, 1.0 - q)


def _as_mixture(q) -> RandomizedQuantizer:
    if isinstance(q, DeterministicQuantizer):
        return RandomizedQuantizer.pure(q)
    return q


def kl_pair(q, h: HypothesisSet, m: int, m_prime: int) -> float:
    """Divergence of the quantized message stream, state m against m_prime.

    For a mixture this is the weight-averaged divergence of the deterministic
    components. A component whose m_prime-message distribution is degenerate
    while the m one is not contributes +inf, which saturates the average.
    """
    if m == m_prime:
        raise ValueError("divergence requires two distinct states")
    mix = _as_mixture(q)
    total = 0.0
    for w, comp in zip(mix.weights, mix.components):
        if w == 0.0:
            continue
        term = _kl_two_sided(*induced_pair(comp, h, m), *induced_pair(comp, h, m_prime))
        if math.isinf(term):
            return INF
        total += float(w) * term
    return total


def info_number(q, h: HypothesisSet, m: int) -> float:
    """Worst-case divergence of state m against every other state."""
    return min(kl_pair(q, h, m, l) for l in range(h.count) if l != m)


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def _endpoint_to_json(x):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def _endpoint_from_json(x):
    if x == "inf":
        return INF
    if x == "-inf":
        return -INF
    return float(x)


def quantizer_to_dict(q) -> dict:
    """Serialize a (possibly deterministic) quantizer to plain JSON data."""
    mix = _as_mixture(q)
    comps = []
    for comp in mix.components:
        entry = {}
        if comp.coeffs is not None:
            entry["a"] = [float(v) for v in comp.coeffs]
        if comp.mask is not None:
            entry["mask"] = list(comp.mask)
            entry["points"] = list(comp.points)
        else:
            entry["intervals"] = [[_endpoint_to_json(lo), _endpoint_to_json(hi)]
                                  for lo, hi in comp.region.intervals]
        comps.append(entry)
    return {"weights": [float(w) for w in mix.weights], "components": comps}


def quantizer_from_dict(data: dict) -> RandomizedQuantizer:
    comps = []
    for entry in data["components"]:
        coeffs = np.asarray(entry["a"], dtype=float) if "a" in entry else None
        if "mask" in entry:
            comps.append(DeterministicQuantizer(
                mask=tuple(entry["mask"]), points=tuple(entry["points"]), coeffs=coeffs))
        else:
            region = Region(tuple((_endpoint_from_json(lo), _endpoint_from_json(hi))
                                  for lo, hi in entry["intervals"]))
            comps.append(DeterministicQuantizer(region=region, coeffs=coeffs))
    return RandomizedQuantizer(tuple(comps), np.asarray(data["weights"], dtype=float))
