"""Closed-form constants of the limit theorems, the degree-d constant chain,
curve generation, power-law fitting, and the finite-degree convergence gap."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import mc, specfun
from .ensembles import (
    IsomGaf,
    KostlanAffine,
    NormalizedG,
    ParabolaDeg3,
    Pullback,
    PullbackSpec,
    SyntheticIdentity,
)

__all__ = [
    "FitResult",
    "CurvePoint",
    "CorrelationCurve",
    "UniversalityGap",
    "LongRangeResidual",
    "short_range_constant",
    "parabola_constant",
    "dn_constant",
    "former_base_closed",
    "former_base_quadrature",
    "latter_integral",
    "parallelotope_moment",
    "parallelotope_moment_quadrature",
    "correlation_curve",
    "smooth_curve",
    "fit_power_law",
    "long_range_residual",
    "universality_gap",
    "describe_kind",
]


@dataclass(frozen=True)
class FitResult:
    exponent: float
    constant: float
    r_squared: float
    t_lo: float
    t_hi: float
    n_points: int
    exponent_stderr: float
    constant_stderr: float


@dataclass(frozen=True)
class CurvePoint:
    t: float
    k: float
    stderr: float
    n_samples: int


@dataclass(frozen=True)
class CorrelationCurve:
    """K(t) sampled on a grid, with provenance enough to reproduce it."""

    ensemble: str
    points: tuple
    estimator: str
    seed: int
    smoothed: bool = False

    def __post_init__(self):
        ts = [p.t for p in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("separations must be strictly increasing")
        if not all(math.isfinite(p.k) for p in self.points):
            raise ValueError("every correlation value must be finite")


@dataclass(frozen=True)
class UniversalityGap:
    d: int
    t: float
    gap: float
    stderr: float
    k_pullback: float
    k_limit: float


@dataclass(frozen=True)
class LongRangeResidual:
    max_abs_deviation: float
    ratios: tuple  # (t, |K-1| / (t e^{-t^2/2})) diagnostics, not asserted


def describe_kind(kind):
    if isinstance(kind, IsomGaf):
        return f"isom n={kind.n}"
    if isinstance(kind, NormalizedG):
        return f"g n={kind.n}"
    if isinstance(kind, KostlanAffine):
        return f"kostlan n={kind.n} d={kind.d}"
    if isinstance(kind, ParabolaDeg3):
        return f"parabola b={kind.b:g}"
    if isinstance(kind, SyntheticIdentity):
        return f"identity n={kind.n}"
    if isinstance(kind, Pullback):
        return f"pullback n={kind.n} k={kind.k} d={kind.d}"
    return type(kind).__name__


def short_range_constant(n, d=None):
    """Leading small-separation coefficient, with or without the degree factor."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    a_n = (math.sqrt(math.pi) * specfun.gamma((n + 2) / 2.0)
           / (2.0 * specfun.gamma((n + 1) / 2.0)))
    if d is None:
        return a_n
    if d < 3:
        raise ValueError("degree must be >= 3")
    return a_n * (d - 1) / d ** (n / 2.0)


def parabola_constant(b):
    """Leading coefficient for the degree-3 curve with curvature b at the origin."""
    return math.pi / (2.0 * math.sqrt(3.0)) * (1.0 + b * b)


def former_base_closed(n):
    """Base of the angular factor: pi^ceil(n/2) 2^floor(n/2) n!!/(2n)!!."""
    return (math.pi ** ((n + 1) // 2) * 2.0 ** (n // 2)
            * specfun.double_factorial(n) / specfun.double_factorial(2 * n))


def former_base_quadrature(n):
    """Same base evaluated as the product of sin-power integrals."""
    total = 1.0
    for j in range(1, n + 1):
        power = 2 * n + 1 - j
        val, _ = integrate.quad(lambda th, p=power: math.sin(th) ** p, 0.0, math.pi)
        total *= val
    return total


def latter_integral(n):
    """Squared-determinant integral over n copies of the sphere, closed form."""
    return (specfun.gamma(n + 1) * math.pi ** (n * n / 2.0)
            / specfun.gamma((n + 2) / 2.0) ** n)


def dn_constant(n, d):
    """Leading numerator constant of the short-range expansion at degree d."""
    if n < 1 or d < 3:
        raise ValueError("need n >= 1 and d >= 3")
    return (d ** n * (d - 1) / 2.0) * former_base_closed(n) ** n * latter_integral(n)


def parallelotope_moment(n, k):
    """k-th moment of the parallelotope volume of n uniform unit vectors."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    value = (specfun.gamma(n / 2.0) / specfun.gamma((n + k) / 2.0)) ** (n - 1)
    for i in range(1, k + 1):
        value *= specfun.gamma((n - 1 + i) / 2.0) / specfun.gamma(i / 2.0)
    return value


def parallelotope_moment_quadrature(n, k):
    """The same moment as a product of ratios of Beta-type integrals."""

    def trig_integral(sin_power, cos_power):
        val, _ = integrate.quad(
            lambda th: math.sin(th) ** sin_power * math.cos(th) ** cos_power,
            0.0, math.pi / 2.0)
        return val

    value = 1.0
    for i in range(1, n):
        value *= (trig_integral(n - i - 1, i - 1 + k)
                  / trig_integral(n - i - 1, i - 1))
    return value


def _point_seed(seed, index):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def correlation_curve(kind, t_values, n_samples, seed, estimator="spherical",
                      chunk_count=mc.DEFAULT_CHUNK_COUNT):
    """Evaluate K on a grid of separations, one derived seed per point."""
    points = []
    for index, t in enumerate(t_values):
        est = mc.correlation_mc(kind, None, float(t), n_samples,
                                _point_seed(seed, index), estimator, chunk_count)
        points.append(CurvePoint(t=float(t), k=est.mean, stderr=est.stderr,
                                 n_samples=est.n_samples))
    return CorrelationCurve(ensemble=describe_kind(kind), points=tuple(points),
                            estimator=estimator, seed=seed)


def smooth_curve(curve, window=15):
    """Centered moving average; the window shrinks symmetrically at the ends."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    half = window // 2
    pts = curve.points
    out = []
    for i, p in enumerate(pts):
        reach = min(half, i, len(pts) - 1 - i)
        neighborhood = pts[i - reach:i + reach + 1]
        k = sum(q.k for q in neighborhood) / len(neighborhood)
        err = math.sqrt(sum(q.stderr ** 2 for q in neighborhood)) / len(neighborhood)
        out.append(CurvePoint(t=p.t, k=k, stderr=err, n_samples=p.n_samples))
    return CorrelationCurve(ensemble=curve.ensemble, points=tuple(out),
                            estimator=curve.estimator, seed=curve.seed,
                            smoothed=True)


def fit_power_law(curve, t_lo=0.05, t_hi=0.3, fixed_exponent=None):
    """Weighted log-log least squares over the points inside [t_lo, t_hi].

    Weights are (K/stderr)^2, the inverse variances of log K; when any point
    lacks an error bar the fit falls back to uniform weights. Passing
    fixed_exponent pins the slope and fits the constant alone.
    """
    sel = [p for p in curve.points if t_lo <= p.t <= t_hi]
    if len(sel) < 5:
        raise ValueError(f"need at least 5 points in [{t_lo}, {t_hi}], have {len(sel)}")
    if any(p.k <= 0 for p in sel):
        raise ValueError("power-law fit requires positive correlation values")
    x = np.log([p.t for p in sel])
    y = np.log([p.k for p in sel])
    if all(p.stderr > 0 for p in sel):
        w = np.array([(p.k / p.stderr) ** 2 for p in sel])
    else:
        w = np.ones(len(sel))

    if fixed_exponent is None:
        sw = w.sum()
        xbar = (w * x).sum() / sw
        ybar = (w * y).sum() / sw
        sxx = (w * (x - xbar) ** 2).sum()
        if sxx == 0:
            raise ValueError("degenerate separations")
        slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
        intercept = ybar - slope * xbar
        slope_var = 1.0 / sxx
        intercept_var = 1.0 / sw + xbar ** 2 / sxx
        exponent_stderr = math.sqrt(slope_var)
    else:
        slope = float(fixed_exponent)
        shifted = y - slope * x
        sw = w.sum()
        intercept = (w * shifted).sum() / sw
        intercept_var = 1.0 / sw
        exponent_stderr = 0.0

    residuals = y - (slope * x + intercept)
    total = y - (w * y).sum() / w.sum()
    ss_res = (w * residuals ** 2).sum()
    ss_tot = (w * total ** 2).sum()
    r_squared = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    constant = math.exp(intercept)
    return FitResult(exponent=slope, constant=constant, r_squared=r_squared,
                     t_lo=t_lo, t_hi=t_hi, n_points=len(sel),
                     exponent_stderr=exponent_stderr,
                     constant_stderr=constant * math.sqrt(intercept_var))


def long_range_residual(curve, t_lo):
    """Deviation of K from 1 beyond t_lo, with the decay-rate ratio table."""
    tail = [p for p in curve.points if p.t >= t_lo]
    if not tail:
        raise ValueError(f"no points at or beyond t = {t_lo}")
    ratios = tuple(
        (p.t, abs(p.k - 1.0) / (p.t * math.exp(-p.t * p.t / 2.0))) for p in tail)
    return LongRangeResidual(
        max_abs_deviation=max(abs(p.k - 1.0) for p in tail), ratios=ratios)


def universality_gap(d, psi, t, n_samples, seed,
                     chunk_count=mc.DEFAULT_CHUNK_COUNT):
    """Distance between the degree-d pulled-back correlation and its limit.

    Both correlations are estimated from the same Gaussian draws, so the
    reported stderr is that of the coupled difference.
    """
    if not isinstance(psi, PullbackSpec):
        raise TypeError("psi must be a PullbackSpec")
    pulled = Pullback(k=psi.k, n=psi.n, d=d, psi=psi)
    limit = IsomGaf(psi.n)
    diff, k_pull, k_lim = mc.correlation_joint_mc(
        pulled, limit, t, n_samples, seed, chunk_count)
    return UniversalityGap(d=d, t=t, gap=abs(diff.mean), stderr=diff.stderr,
                           k_pullback=k_pull.mean, k_limit=k_lim.mean)
