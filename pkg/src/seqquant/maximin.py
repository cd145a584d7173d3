"""Maximin quantizer search: worst-case-divergence-optimal sensor quantizers.

For a designated state m the goal is the (possibly randomized) quantizer
maximizing the smallest divergence of m against every other state. The search
follows the structure of the problem: deterministic ULQ candidates are laid
out on a grid over the unit sphere of coefficient vectors, a small linear
program picks the optimal randomization over them (a basic optimal solution
mixes at most M-1 candidates, one per binding constraint), and a local
coordinate refinement polishes the supported coefficient vectors.

Finite-alphabet problems skip the ULQ structure entirely:
:func:`brute_force_maximin` enumerates every subset quantizer and solves the
same linear program exactly, which makes it the testing oracle for the
continuous pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AlphabetTooLargeError, DegenerateRegionError, UnsupportedFamilyError
from .models import HypothesisSet
from .quantizer import (
    DeterministicQuantizer,
    RandomizedQuantizer,
    Region,
    RootFindConfig,
    bernoulli_kl,
    canonical_coeffs,
    induced_bernoulli,
    kl_pair,
    scan_bracket,
    ulq_region,
)

_SUPPORT_TOL = 1e-10
_VALUE_TOL = 1e-9


@dataclass(frozen=True)
class GridConfig:
    """Candidate-grid and refinement knobs for the continuous solver."""

    resolution: int = 90
    root: RootFindConfig = RootFindConfig()
    kl_cap: float = 1e6
    refine_tol: float = 1e-6
    refine_max_sweeps: int = 50
    golden_tol: float = 1e-9


@dataclass(frozen=True)
class CandidateSet:
    """Deterministic candidates for one state, with their divergence rows.

    ``divergences[j, k]`` is the message divergence of state ``state`` against
    ``others[k]`` under candidate ``j``; entries may be +inf for perfectly
    separating candidates.
    """

    state: int
    quantizers: tuple
    others: tuple
    divergences: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.divergences, dtype=float)
        if d.shape != (len(self.quantizers), len(self.others)):
            raise ValueError("divergence matrix shape does not match candidates")
        if np.any(np.isnan(d)) or np.any(d < 0):
            raise ValueError("divergences must be nonnegative (or +inf)")
        d.setflags(write=False)
        object.__setattr__(self, "divergences", d)
        object.__setattr__(self, "quantizers", tuple(self.quantizers))
        object.__setattr__(self, "others", tuple(self.others))


@dataclass(frozen=True)
class MaximinSolution:
    state: int
    quantizer: RandomizedQuantizer
    value: float
    per_pair: np.ndarray
    trace: dict


# ---------------------------------------------------------------------------
# Dense simplex for the tiny matrix-game LP
# ---------------------------------------------------------------------------

def _game_lp(payoff: np.ndarray):
    """Maximin randomization over the rows of a nonnegative payoff matrix.

    Returns ``(weights, value, iterations)`` where ``weights`` solves
    max_p min_l sum_j p_j payoff[j, l] over the probability simplex.

    Uses the classical covering-LP reduction: after shifting all entries by
    +1, minimize 1'x subject to payoff' x >= 1, x >= 0; then p = x / 1'x and
    the shifted game value is 1 / 1'x. The LP has one row per payoff column,
    so the returned basic solution has at most that many positive weights.
    The starting basis is the best pure row plus surplus variables for its
    non-binding columns, which is feasible because that row's smallest entry
    is the binding one.
    """
    G = np.asarray(payoff, dtype=float) + 1.0
    nrows, ncols = G.shape
    b = np.ones(ncols)

    j0 = int(np.argmax(np.min(G, axis=1)))
    lstar = int(np.argmin(G[j0]))
    basis = [j0] + [nrows + l for l in range(ncols) if l != lstar]

    def column(var):
        if var < nrows:
            return G[var]
        e = np.zeros(ncols)
        e[var - nrows] = -1.0
        return e

    costs = np.concatenate([np.ones(nrows), np.zeros(ncols)])
    max_iters = 2000 * (ncols + 2)
    bland_after = 200 * (ncols + 2)

    for it in range(max_iters):
        B = np.column_stack([column(v) for v in basis])
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, costs[basis])

        rc = np.concatenate([1.0 - G @ y, y])
        rc[basis] = 0.0
        if it < bland_after:
            enter = int(np.argmin(rc))
            if rc[enter] >= -1e-11:
                break
        else:
            negative = np.nonzero(rc < -1e-11)[0]
            if negative.size == 0:
                break
            enter = int(negative[0])

        d = np.linalg.solve(B, column(enter))
        candidates = np.nonzero(d > 1e-12)[0]
        assert candidates.size > 0, "covering LP cannot be unbounded"
        ratios = xb[candidates] / d[candidates]
        best = ratios.min()
        ties = candidates[ratios <= best + 1e-15]
        leave = int(min(ties, key=lambda i: basis[i]))
        basis[leave] = enter
    else:
        raise RuntimeError("simplex failed to converge")

    x = np.zeros(nrows)
    for var, val in zip(basis, xb):
        if var < nrows:
            x[var] = max(val, 0.0)
    total = float(x.sum())
    assert total > 0.0
    weights = x / total
    return weights, 1.0 / total - 1.0, it


def optimal_weights(cs: CandidateSet, kl_cap: float = 1e6):
    """Best randomization weights over a candidate set and its maximin value.

    Infinite divergences are capped at ``kl_cap`` inside the LP; a value at
    the cap means some mixture separates every other state perfectly. The
    value equals the smallest capped per-pair divergence of the returned
    mixture (basic solution, support at most the number of rival states).
    """
    if len(cs.quantizers) == 0:
        raise ValueError("candidate set is empty")
    capped = np.minimum(cs.divergences, kl_cap)
    weights, _, _ = _game_lp(capped)
    value = float(np.min(weights @ capped))
    return weights, value


# ---------------------------------------------------------------------------
# Coefficient-sphere parameterization and candidate generation
# ---------------------------------------------------------------------------

def angles_to_unit(angles) -> np.ndarray:
    """Hyperspherical angles (length M-1) to a unit vector (length M)."""
    out = []
    s = 1.0
    for t in angles:
        out.append(s * math.cos(t))
        s *= math.sin(t)
    out.append(s)
    return np.asarray(out)


def unit_to_angles(a) -> np.ndarray:
    """Inverse of :func:`angles_to_unit` (first angles in [0, pi], last free)."""
    a = np.asarray(a, dtype=float)
    n = len(a)
    angles = np.empty(n - 1)
    for i in range(n - 2):
        angles[i] = math.atan2(float(np.linalg.norm(a[i + 1:])), a[i])
    angles[n - 2] = math.atan2(a[n - 1], a[n - 2])
    return angles


def _sphere_grid(mcount: int, resolution: int) -> np.ndarray:
    """Deterministic grid of unit coefficient vectors (rows)."""
    if mcount == 2:
        ts = 2.0 * math.pi * np.arange(4 * resolution) / (4 * resolution) - math.pi
        return np.column_stack([np.cos(ts), np.sin(ts)])
    if mcount == 3:
        polar = math.pi * (np.arange(resolution) + 0.5) / resolution
        azim = 2.0 * math.pi * np.arange(2 * resolution) / (2 * resolution) - math.pi
        ph, az = np.meshgrid(polar, azim, indexing="ij")
        return np.column_stack([
            np.cos(ph).ravel(),
            (np.sin(ph) * np.cos(az)).ravel(),
            (np.sin(ph) * np.sin(az)).ravel(),
        ])
    # higher dimensions: a deterministic pseudo-uniform sample of directions
    rng = np.random.default_rng(180 * resolution + mcount)
    dirs = rng.standard_normal((resolution * resolution, mcount))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _regions_for_grid(A: np.ndarray, h: HypothesisSet, cfg: RootFindConfig):
    """Vectorized positivity-region extraction for many coefficient rows.

    Returns a list with one entry per row: a Region, or None when the row's
    combination is nonpositive everywhere (constant quantizer). Mirrors
    :func:`seqquant.quantizer.ulq_region`, which remains the scalar reference
    implementation.
    """
    lo, hi = scan_bracket(h, cfg)
    xs = np.linspace(lo, hi, cfg.scan_points)
    F = np.stack([d.pdf(xs) for d in h.densities])
    G = A @ F
    pos = G > 0.0
    flip = pos[:, 1:] != pos[:, :-1]

    rows, cols = np.nonzero(flip)
    los = xs[cols].copy()
    his = xs[cols + 1].copy()
    glo = G[rows, cols].copy()
    Ar = A[rows]

    width = float(xs[1] - xs[0])
    steps = max(1, int(math.ceil(math.log2(width / cfg.root_tol))) + 1)

    def combo(x):
        vals = np.stack([d.pdf(x) for d in h.densities], axis=1)
        return np.einsum("ij,ij->i", Ar, vals)

    for _ in range(steps):
        mid = 0.5 * (los + his)
        gm = combo(mid)
        go_left = (glo > 0.0) != (gm > 0.0)
        his = np.where(go_left, mid, his)
        los = np.where(go_left, los, mid)
        glo = np.where(go_left, glo, gm)
    roots = 0.5 * (los + his)

    by_row = [[] for _ in range(A.shape[0])]
    for r, x in zip(rows, roots):
        by_row[r].append(float(x))

    regions = []
    for j in range(A.shape[0]):
        rs = sorted(by_row[j])
        if not rs:
            regions.append(Region(((-math.inf, math.inf),)) if pos[j, 0] else None)
            continue
        pts = ([-math.inf] if pos[j, 0] else []) + rs + [math.inf]
        ivs = tuple((pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2))
        regions.append(Region(ivs))
    return regions


def generate_candidates(m: int, h: HypothesisSet, cfg: GridConfig = GridConfig()) -> CandidateSet:
    """Deterministic ULQ candidates on a coefficient-sphere grid.

    Constant quantizers (empty or full-line regions) are dropped since they
    carry no information, and candidates with coinciding regions (up to the
    root tolerance) are deduplicated keeping the first occurrence.
    """
    if h.family != "gaussian":
        raise UnsupportedFamilyError(
            "grid candidates need a continuous family; use brute_force_maximin")
    A = _sphere_grid(h.count, cfg.resolution)
    regions = _regions_for_grid(A, h, cfg.root)

    quantizers = []
    seen = set()
    for a, region in zip(A, regions):
        if region is None or region.intervals == ((-math.inf, math.inf),):
            continue
        q = DeterministicQuantizer(region=region, coeffs=a)
        sig = q.signature(tol_decimals=8)
        if sig in seen:
            continue
        seen.add(sig)
        quantizers.append(q)

    others = tuple(l for l in range(h.count) if l != m)
    div = _divergence_matrix(quantizers, h, m, others)
    return CandidateSet(m, tuple(quantizers), others, div)


def _divergence_matrix(quantizers, h, m, others) -> np.ndarray:
    out = np.empty((len(quantizers), len(others)))
    for j, q in enumerate(quantizers):
        pairs = [induced_pair(q, h, s) for s in range(h.count)]
        for k, l in enumerate(others):
            out[j, k] = _kl_two_sided(*pairs[m], *pairs[l])
    return out


# ---------------------------------------------------------------------------
# Full solver: grid + LP + coordinate refinement
# ---------------------------------------------------------------------------

def solve_maximin(m: int, h: HypothesisSet, cfg: GridConfig = GridConfig()) -> MaximinSolution:
    """Maximin quantizer for state m over a continuous hypothesis set.

    Runs :func:`generate_candidates` and :func:`optimal_weights`, then
    refines the supported coefficient vectors coordinate-wise: each
    hyperspherical angle is improved by golden-section search, re-solving the
    LP over the perturbed support together with the incumbent components, so
    the value never decreases. Stops when a full sweep improves the value by
    less than ``cfg.refine_tol`` or after ``cfg.refine_max_sweeps`` sweeps.
    """
    cs = generate_candidates(m, h, cfg)
    if len(cs.quantizers) == 0:
        raise DegenerateRegionError("no informative candidate on the grid")
    weights, value = optimal_weights(cs, cfg.kl_cap)
    support = [cs.quantizers[j] for j in np.nonzero(weights > _SUPPORT_TOL)[0]]

    others = cs.others
    step = math.pi / cfg.resolution
    sweeps = 0
    for sweeps in range(1, cfg.refine_max_sweeps + 1):
        start_value = value
        for i in range(len(support)):
            if i >= len(support):
                break
            for k in range(h.count - 1):
                angles = unit_to_angles(support[i].coeffs)

                def objective(t, _k=k, _angles=angles):
                    trial = _angles.copy()
                    trial[_k] = t
                    cand = _make_candidate(trial, h, cfg)
                    if cand is None:
                        return -math.inf, None
                    sigs = {s.signature() for s in support}
                    pool = support + [cand] if cand.signature() not in sigs else list(support)
                    w, v = _pool_lp(pool, h, m, others, cfg.kl_cap)
                    return v, (pool, w, v)

                _, payload = _golden_max(objective, angles[k] - step,
                                         angles[k] + step, cfg.golden_tol)
                if payload is None:
                    continue
                pool, w, v = payload
                if v > value + 1e-15:
                    value = v
                    support = [pool[j] for j in np.nonzero(w > _SUPPORT_TOL)[0]]
                    if i >= len(support):
                        break
        if value - start_value < cfg.refine_tol:
            break

    w, value = _pool_lp(support, h, m, others, cfg.kl_cap)
    quantizer, per_pair, value = _assemble(support, w, h, m, others, cfg.kl_cap)
    trace = {
        "candidates": len(cs.quantizers),
        "refine_sweeps": sweeps,
        "degenerate": value <= _VALUE_TOL,
        "perfect_separation": value >= cfg.kl_cap * (1.0 - 1e-9),
    }
    assert len(quantizer.components) <= h.count - 1
    return MaximinSolution(m, quantizer, value, per_pair, trace)


def _make_candidate(angles, h, cfg) -> DeterministicQuantizer | None:
    a = angles_to_unit(angles)
    try:
        region = ulq_region(a, h, cfg.root)
    except DegenerateRegionError:
        return None
    if region.intervals == ((-math.inf, math.inf),):
        return None
    return DeterministicQuantizer(region=region, coeffs=a)


def _pool_matrix(pool, h, m, others, cap):
    return np.minimum(_divergence_matrix(pool, h, m, others), cap)


def _pool_lp(pool, h, m, others, cap):
    d = _pool_matrix(pool, h, m, others, cap)
    weights, _, _ = _game_lp(d)
    return weights, float(np.min(weights @ d))


def _golden_max(objective, lo, hi, tol):
    """Golden-section maximization of a scalar function returning (value, payload)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, pc = objective(c)
    fd, pd = objective(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd, pd = d, c, fc, pc
            c = b - invphi * (b - a)
            fc, pc = objective(c)
        else:
            a, c, fc, pc = c, d, fd, pd
            d = a + invphi * (b - a)
            fd, pd = objective(d)
    return (c, pc) if fc >= fd else (d, pd)


def _assemble(pool, weights, h, m, others, cap):
    """Final mixture cleanup: drop zero weights, merge duplicate regions,
    and prefer a deterministic component when one already attains the value."""
    keep = {}
    for q, w in zip(pool, weights):
        if w <= _SUPPORT_TOL:
            continue
        sig = q.signature()
        if sig in keep:
            keep[sig] = (keep[sig][0], keep[sig][1] + w)
        else:
            keep[sig] = (q, w)
    comps = [q for q, _ in keep.values()]
    ws = np.array([w for _, w in keep.values()])
    ws = ws / ws.sum()

    matrix = _pool_matrix(comps, h, m, others, cap)
    value = float(np.min(ws @ matrix))

    solo = matrix.min(axis=1)
    best = int(np.argmax(solo))
    if solo[best] >= value - _VALUE_TOL:
        comps, ws, value = [comps[best]], np.array([1.0]), float(solo[best])
        matrix = matrix[[best]]

    quantizer = RandomizedQuantizer(tuple(comps), ws)
    per_pair = ws @ matrix
    return quantizer, np.asarray(per_pair), value


# ---------------------------------------------------------------------------
# Exhaustive oracle for finite alphabets
# ---------------------------------------------------------------------------

_MAX_ALPHABET = 16


def brute_force_maximin(m: int, h: HypothesisSet, kl_cap: float = 1e6) -> MaximinSolution:
    """Exact maximin solution over every subset quantizer of a finite alphabet.

    Enumerates all 2^|alphabet| deterministic quantizers, builds the full
    divergence matrix, and solves the same LP as the continuous pipeline.
    This is exact for its scenario class and serves as the testing oracle.
    """
    if h.family != "finite":
        raise UnsupportedFamilyError("brute force enumeration needs a finite alphabet")
    points = h.alphabet
    n = len(points)
    if n > _MAX_ALPHABET:
        raise AlphabetTooLargeError(f"alphabet size {n} exceeds the limit {_MAX_ALPHABET}")

    quantizers = tuple(
        DeterministicQuantizer(mask=tuple((code >> i) & 1 for i in range(n)), points=points)
        for code in range(2 ** n))
    others = tuple(l for l in range(h.count) if l != m)
    div = _divergence_matrix(quantizers, h, m, others)
    cs = CandidateSet(m, quantizers, others, div)

    weights, value = optimal_weights(cs, kl_cap)
    pool = [cs.quantizers[j] for j in np.nonzero(weights > _SUPPORT_TOL)[0]]
    w = weights[weights > _SUPPORT_TOL]
    w = w / w.sum()
    quantizer, per_pair, value = _assemble(pool, w, h, m, others, kl_cap)
    trace = {
        "candidates": len(quantizers),
        "refine_sweeps": 0,
        "degenerate": value <= _VALUE_TOL,
        "perfect_separation": value >= kl_cap * (1.0 - 1e-9),
    }
    assert len(quantizer.components) <= h.count - 1
    return MaximinSolution(m, quantizer, value, per_pair, trace)
