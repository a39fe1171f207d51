"""Direct simulation cross-checks for the one-dimensional ensembles: sample
actual random polynomials and truncated analytic functions, find their real
zeros, and estimate intensity and pair correlation from the point sets.

Nothing here goes through the pair-covariance pipeline; agreement between
these estimates and the integral estimators is an end-to-end check.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

__all__ = [
    "RootSample",
    "PairHistogram",
    "sample_kostlan_roots",
    "sample_gaf_roots",
    "kostlan_root_samples",
    "gaf_root_samples",
    "poisson_control_samples",
    "sturm_root_count",
    "pair_correlation_estimate",
    "separation_to_angle",
    "angle_to_separation",
    "kostlan_intensity",
    "gaf_intensity",
]

GRID_STEP = 0.005


@dataclass(frozen=True)
class RootSample:
    label: str
    meta: tuple
    roots: tuple
    seed: int


@dataclass(frozen=True)
class PairHistogram:
    """Binned pair-correlation estimate for a homogeneous point process."""

    bin_edges: np.ndarray
    counts: np.ndarray
    k_hat: np.ndarray
    stderr: np.ndarray
    intensity: float
    volume: float
    domain: str
    n_samples: int

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def _rng_and_tag(seed):
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(entropy=int(seed))
    tag = int(ss.generate_state(1, dtype=np.uint64)[0])
    return np.random.Generator(np.random.Philox(ss)), tag


def kostlan_intensity(d):
    """Projective zero intensity of the degree-d polynomial: sqrt(d) zeros
    spread over total angle pi."""
    return math.sqrt(d) / math.pi


def gaf_intensity():
    return 1.0 / math.pi


def separation_to_angle(t):
    return 2.0 * math.atan(t / 2.0)


def angle_to_separation(s):
    return 2.0 * math.tan(s / 2.0)


def _real_roots(coeffs):
    """Real roots of a coefficient vector (low order first), polished once."""
    c = np.asarray(coeffs, dtype=float)
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
    if c.size <= 1:
        return []
    raw = npoly.polyroots(c)
    keep = np.abs(raw.imag) <= 1e-10 * (1.0 + np.abs(raw.real))
    roots = raw.real[keep]
    if roots.size == 0:
        return []
    deriv = npoly.polyder(c)
    pv = npoly.polyval(roots, c)
    dv = npoly.polyval(roots, deriv)
    safe = dv != 0
    roots = np.where(safe, roots - np.where(safe, pv, 0.0) / np.where(safe, dv, 1.0), roots)
    scale = np.abs(c) @ np.abs(roots[None, :].repeat(c.size, 0)
                               ** np.arange(c.size)[:, None])
    residual = np.abs(npoly.polyval(roots, c))
    good = residual <= 1e-8 * np.maximum(scale, 1e-300)
    return sorted(float(r) for r in roots[good])


def sample_kostlan_roots(d, seed):
    """One draw of the degree-d ensemble and all of its real roots.

    Coefficients are iid normal weighted by sqrt of the binomial, roots come
    from the companion matrix with a Newton polish; an exactly vanishing top
    coefficient just lowers the degree.
    """
    if d < 1:
        raise ValueError("degree must be >= 1")
    rng, tag = _rng_and_tag(seed)
    a = rng.standard_normal(d + 1)
    weights = np.sqrt([math.comb(d, j) for j in range(d + 1)])
    roots = _real_roots(a * weights)
    return RootSample(label="kostlan", meta=(d,), roots=tuple(roots), seed=tag)


def _gaf_tail(n_trunc, half_width):
    """Upper bound on the dropped covariance mass at |x| = half_width."""
    total = 0.0
    term_log = 0.0
    for j in range(n_trunc + 1, n_trunc + 400):
        term_log = 2 * j * math.log(max(half_width, 1e-300)) - math.lgamma(j + 1)
        term = math.exp(term_log)
        total += term
        if term < 1e-30:
            break
    return total


def sample_gaf_roots(n_trunc, half_width, seed):
    """Real zeros of the truncated analytic function on [-half_width, half_width].

    Roots are isolated by sign changes on a fine grid and closed in by brentq;
    the truncation order must satisfy n_trunc >= 8 half_width^2 so the dropped
    tail cannot move zeros at the resolution of the grid.
    """
    if n_trunc < 8 * half_width ** 2:
        raise ValueError("truncation order must be at least 8 x half_width^2")
    if half_width > 0 and _gaf_tail(n_trunc, half_width) > 1e-12:
        warnings.warn("covariance tail beyond the truncation exceeds 1e-12")
    rng, tag = _rng_and_tag(seed)
    a = rng.standard_normal(n_trunc + 1)
    coeffs = a * np.exp([-0.5 * math.lgamma(j + 1) for j in range(n_trunc + 1)])
    roots = []
    if half_width > 0:
        m = int(math.ceil(2 * half_width / GRID_STEP)) + 1
        grid = np.linspace(-half_width, half_width, m)
        vals = npoly.polyval(grid, coeffs)

        def f(x):
            return npoly.polyval(x, coeffs)

        for i in range(m - 1):
            if vals[i] == 0.0:
                roots.append(float(grid[i]))
            elif vals[i] * vals[i + 1] < 0.0:
                roots.append(float(brentq(f, grid[i], grid[i + 1])))
        if vals[-1] == 0.0:
            roots.append(float(grid[-1]))
    return RootSample(label="gaf", meta=(n_trunc, half_width),
                      roots=tuple(sorted(roots)), seed=tag)


def kostlan_root_samples(d, count, seed):
    return [sample_kostlan_roots(d, np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
            for i in range(count)]


def gaf_root_samples(n_trunc, half_width, count, seed):
    return [sample_gaf_roots(n_trunc, half_width,
                             np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
            for i in range(count)]


def poisson_control_samples(intensity, count, seed, domain="projective",
                            half_width=None):
    """Matched-intensity Poisson point sets, for estimator calibration.

    Projective samples are stored in the affine coordinate (tangent of the
    angle) so they flow through the same histogram path as polynomial roots.
    """
    out = []
    for i in range(count):
        rng, tag = _rng_and_tag(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        if domain == "projective":
            n_points = rng.poisson(intensity * math.pi)
            angles = rng.uniform(-math.pi / 2, math.pi / 2, n_points)
            pts = np.tan(angles)
        elif domain == "window":
            if half_width is None:
                raise ValueError("window domain needs half_width")
            n_points = rng.poisson(intensity * 2 * half_width)
            pts = rng.uniform(-half_width, half_width, n_points)
        else:
            raise ValueError(f"unknown domain {domain!r}")
        out.append(RootSample(label="poisson", meta=(domain,),
                              roots=tuple(sorted(float(p) for p in pts)), seed=tag))
    return out


def _to_fractions(coeffs):
    c = [Fraction(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _frac_polyval(c, x):
    acc = Fraction(0)
    for v in reversed(c):
        acc = acc * x + v
    return acc


def sturm_root_count(coeffs, lo=None, hi=None):
    """Number of distinct real roots in (lo, hi], counted exactly.

    Coefficients are converted to rationals, so the sign chain is free of
    rounding; usable as an independent oracle for small degrees only.
    """
    p0 = _to_fractions(coeffs)
    if len(p0) <= 1:
        return 0
    p1 = [v * i for i, v in enumerate(p0)][1:]
    chain = [p0, p1]
    while len(chain[-1]) > 1:
        num, den = chain[-2], chain[-1]
        rem = list(num)
        while len(rem) >= len(den) and any(v != 0 for v in rem):
            factor = rem[-1] / den[-1]
            shift = len(rem) - len(den)
            for i, v in enumerate(den):
                rem[shift + i] -= factor * v
            while len(rem) > 1 and rem[-1] == 0:
                rem.pop()
            if len(rem) < len(den):
                break
        if all(v == 0 for v in rem):
            break
        chain.append([-v for v in rem])
    if lo is None or hi is None:
        degree = len(p0) - 1
        bound = 1 + max(abs(v / p0[-1]) for v in p0[:-1])
        lo = -bound if lo is None else Fraction(lo)
        hi = bound if hi is None else Fraction(hi)
    else:
        lo, hi = Fraction(lo), Fraction(hi)

    def sign_changes(x):
        signs = []
        for poly in chain:
            v = _frac_polyval(poly, x)
            if v != 0:
                signs.append(1 if v > 0 else -1)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    return sign_changes(lo) - sign_changes(hi)


def pair_correlation_estimate(samples, domain, bins, window_half_width=None):
    """Binned pair-correlation estimate across replicate point sets.

    Projective distances fold the angle difference onto [0, pi/2] over domain
    volume pi. For the window domain only reference points at least the
    largest bin distance from the boundary contribute pairs; partners may lie
    anywhere, which keeps a Poisson process calibrated at exactly 1.
    Intensity is measured from the samples themselves.
    """
    if len(samples) < 500:
        raise ValueError("need at least 500 replicate samples")
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bins must be a strictly increasing edge vector")
    if edges[0] < 0:
        raise ValueError("distances are nonnegative")
    n_bins = edges.size - 1
    n_samples = len(samples)

    if domain == "projective":
        volume = math.pi
        total_points = sum(len(s.roots) for s in samples)
        intensity = total_points / (n_samples * volume)
        norm_volume = volume
    elif domain == "window":
        if window_half_width is None:
            raise ValueError("window domain needs window_half_width")
        reach = edges[-1]
        inner = window_half_width - reach
        if inner <= 0:
            raise ValueError("window too small for the largest bin distance")
        volume = 2.0 * window_half_width
        total_points = sum(len(s.roots) for s in samples)
        intensity = total_points / (n_samples * volume)
        norm_volume = 2.0 * inner
    else:
        raise ValueError(f"unknown domain {domain!r}")

    counts = np.zeros((n_samples, n_bins))
    for row, sample in enumerate(samples):
        pts = np.asarray(sample.roots, dtype=float)
        if pts.size < 1:
            continue
        if domain == "projective":
            phi = np.arctan(pts)
            diff = np.abs(phi[:, None] - phi[None, :])
            dist = np.minimum(diff, math.pi - diff)
            mask = ~np.eye(pts.size, dtype=bool)
            values = dist[mask]
        else:
            refs = pts[np.abs(pts) <= inner]
            if refs.size == 0:
                continue
            dist = np.abs(refs[:, None] - pts[None, :])
            values = dist[dist > 0]
        counts[row] = np.histogram(values, edges)[0]

    widths = np.diff(edges)
    if intensity <= 0:
        raise ValueError("no points observed; intensity is zero")
    denom = intensity ** 2 * norm_volume * 2.0 * widths
    per_sample = counts / denom
    k_hat = per_sample.mean(axis=0)
    spread = per_sample.std(axis=0, ddof=1) / math.sqrt(n_samples)
    stderr = np.where(counts.sum(axis=0) > 0, spread, np.inf)
    return PairHistogram(bin_edges=edges, counts=counts.mean(axis=0),
                         k_hat=k_hat, stderr=stderr, intensity=intensity,
                         volume=norm_volume, domain=domain, n_samples=n_samples)
