"""Monte Carlo engines for the correlation, density, and appendix integrals.

Every estimator funnels through one chunked driver with counter-based
substreams, so a run is reproducible bit for bit from (seed, n_samples,
chunk_count) no matter how many worker threads execute the chunks. The radial
part of the spherical estimator is integrated analytically; only angular
averages are sampled.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from mpmath import mp

from . import specfun
from .ensembles import DPS, Pullback, entries_for, entries_pullback
from .kacrice import (
    NotPositiveDefinite,
    _lambdas_mp,
    _mp_cholesky,
    _mp_tilde,
    density_from_block,
    point_density,
    single_point_covariance,
    spectrum,
)

__all__ = [
    "McEstimate",
    "JacobianPair",
    "correlation_mc",
    "correlation_joint_mc",
    "density_mc",
    "parallelotope_moment_mc",
    "sphere_det_integral_mc",
    "perturbation_gap",
    "worker_count",
    "WORKER_ENV",
    "MIN_CORRELATION_SAMPLES",
    "DEFAULT_CHUNK_COUNT",
]

WORKER_ENV = "ZEROCORR_WORKERS"
MIN_CORRELATION_SAMPLES = 10_000
DEFAULT_CHUNK_COUNT = 64


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    estimator: str
    chunk_count: int
    nonfinite_count: int = 0


@dataclass(frozen=True)
class JacobianPair:
    """Jacobian factors at the two points, with the interleaved coordinate
    vector u = [xi_1, eta_1, ..., xi_n, eta_n] (each a block of n)."""

    xi: np.ndarray
    eta: np.ndarray

    @property
    def u(self):
        n = self.xi.shape[0]
        return np.concatenate(
            [np.concatenate([self.xi[i], self.eta[i]]) for i in range(n)])

    @classmethod
    def from_vector(cls, u, n):
        r = np.asarray(u, dtype=float).reshape(n, 2 * n)
        return cls(xi=r[:, :n].copy(), eta=r[:, n:].copy())


def worker_count():
    raw = os.environ.get(WORKER_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _chunk_sizes(n_samples, chunk_count):
    base, rem = divmod(n_samples, chunk_count)
    return [base + 1 if i < rem else base for i in range(chunk_count)]


def _mc_run(kernel, n_channels, n_samples, seed, chunk_count):
    """Chunked mean/stderr of a vector-valued sampling kernel.

    kernel(rng, count) returns a (count, n_channels) array. Rows with any
    non-finite entry are dropped and counted. The reduction visits chunk
    partials in index order, so the result does not depend on thread timing.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    sizes = _chunk_sizes(n_samples, chunk_count)

    def one_chunk(index):
        count = sizes[index]
        if count == 0:
            return (np.zeros(n_channels), np.zeros(n_channels), 0, 0)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
        rng = np.random.Generator(np.random.Philox(ss))
        vals = np.asarray(kernel(rng, count), dtype=float).reshape(count, n_channels)
        good = np.isfinite(vals).all(axis=1)
        kept = vals[good]
        return (kept.sum(axis=0), (kept * kept).sum(axis=0),
                kept.shape[0], count - kept.shape[0])

    workers = worker_count()
    if workers == 1:
        partials = [one_chunk(i) for i in range(chunk_count)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(one_chunk, range(chunk_count)))

    total = np.zeros(n_channels)
    total_sq = np.zeros(n_channels)
    kept = 0
    dropped = 0
    for s, s2, c, nf in partials:
        total = total + s
        total_sq = total_sq + s2
        kept += c
        dropped += nf
    if kept == 0:
        raise ArithmeticError("every sample was non-finite")
    mean = total / kept
    var = np.maximum(total_sq / kept - mean * mean, 0.0)
    stderr = np.sqrt(var / kept)
    return mean, stderr, kept, dropped


def _absdet(a):
    """|det| over a batch of small square matrices (last two axes)."""
    n = a.shape[-1]
    if n == 1:
        return np.abs(a[..., 0, 0])
    if n == 2:
        return np.abs(a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0])
    if n == 3:
        return np.abs(
            a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))
    return np.abs(np.linalg.det(a))


def _det(a):
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, 0]
    if n == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    return np.linalg.det(a)


def _unit_rows(z):
    norms = np.sqrt((z * z).sum(axis=-1, keepdims=True))
    return z / norms


class _EntriesSetup:
    """Sampling geometry for an ensemble with closed-form eigenvalues."""

    def __init__(self, kind, t):
        n = kind.n
        entries = entries_for(kind, t)
        with mp.workdps(DPS):
            try:
                _mp_cholesky(_mp_tilde(entries, n))
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(str(exc), t=t) from None
            if not abs(entries.mu) < entries.alpha:
                raise NotPositiveDefinite(
                    "value block is not positive definite", t=t)
            l1, l2, l3, l4 = _lambdas_mp(entries, n)
            for v in (l1, l2, l3, l4):
                if v is not None and v <= 0:
                    raise NotPositiveDefinite(
                        "conditional form has a nonpositive eigenvalue", t=t)
            rho = mp.mpf(point_density(entries, n))
            f1 = (entries.alpha + entries.mu) / l3
            f2 = (entries.alpha - entries.mu) / l4
            bb = entries.beta ** 2 - entries.eta ** 2
            det_c = bb ** (n * (n - 1)) * f1 ** n * f2 ** n
            half = mp.mpf(1) / 2
            lam34 = l3 * l4
            lam12 = l1 * l2 if n > 1 else mp.mpf(1)
            eig_product = lam12 ** (-mp.mpf(n * (n - 1)) / 2) * lam34 ** (-mp.mpf(n) / 2)
            denom = ((2 * mp.pi) ** (n * (n + 1)) * rho * rho * mp.sqrt(det_c))
            radial = (mp.mpf(2) ** n * mp.factorial(n)) ** n
            area = mp.mpf(specfun.sphere_area(2 * n)) ** n
            self.pref_spherical = float(area * radial * eig_product / denom)
            det_omega = (lam12 ** (n - 1) * lam34) ** n
            self.pref_gaussian = float(
                (2 * mp.pi) ** (n * n) / (mp.sqrt(det_omega) * denom))
            pair_scale = []
            for _ in range(n - 1):
                pair_scale.extend([1 / mp.sqrt(l1), 1 / mp.sqrt(l2)])
            pair_scale.extend([1 / mp.sqrt(l3), 1 / mp.sqrt(l4)])
            self.scale = np.array([float(v) for v in pair_scale])
        self.n = n
        spm = spectrum(entries, n)
        block = slice(0, 2 * n)
        self.transform = (spm.q[block, block] @ spm.p[block, block]) * self.scale


def _spherical_kernel(setup):
    n = setup.n
    s = np.sqrt(2.0) / 2.0
    scale = setup.scale

    def kernel(rng, count):
        z = rng.standard_normal((count, n, 2 * n))
        tau = _unit_rows(z) * scale
        xi = s * (tau[..., 1::2] - tau[..., 0::2])
        eta = s * (tau[..., 0::2] + tau[..., 1::2])
        return (_absdet(xi) * _absdet(eta))[:, None]

    return kernel


def _gaussian_kernel(transform, n):
    lt = transform.T.copy()

    def kernel(rng, count):
        z = rng.standard_normal((count, n, 2 * n))
        u = z @ lt
        return (_absdet(u[..., :n]) * _absdet(u[..., n:]))[:, None]

    return kernel


class _PullbackSetup:
    """Sampling geometry for a pulled-back ensemble, from its dense pair block.

    The separation argument is in the rescaled units of the limit: chart
    points sit at -t/(2 sqrt(d)) and +t/(2 sqrt(d)) along the last coordinate.
    """

    def __init__(self, kind, t):
        n = kind.n
        x = np.zeros(n)
        y = np.zeros(n)
        x[-1] = -0.5 * t / math.sqrt(kind.d)
        y[-1] = 0.5 * t / math.sqrt(kind.d)
        full = entries_pullback(kind, x, y)
        size = 2 * (n + 1)
        block = full[:size, :size]
        try:
            np.linalg.cholesky(block)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("pulled-back pair covariance", t=t) from None
        values = [0, n + 1]
        grads = [i for i in range(size) if i not in values]
        c_vv = block[np.ix_(values, values)]
        c_gv = block[np.ix_(grads, values)]
        c_gg = block[np.ix_(grads, grads)]
        cond = c_gg - c_gv @ np.linalg.solve(c_vv, c_gv.T)
        self.transform = np.linalg.cholesky(cond)
        sign, logdet_block = np.linalg.slogdet(block)
        if sign <= 0:
            raise NotPositiveDefinite("pulled-back pair covariance", t=t)
        _, logdet_cond = np.linalg.slogdet(cond)
        rho_x = density_from_block(block[:n + 1, :n + 1])
        rho_y = density_from_block(block[n + 1:, n + 1:])
        log_pref = (n * n * math.log(2 * math.pi) + 0.5 * n * logdet_cond
                    - n * (n + 1) * math.log(2 * math.pi)
                    - math.log(rho_x) - math.log(rho_y) - 0.5 * n * logdet_block)
        self.pref_gaussian = math.exp(log_pref)
        self.n = n


def _setup_for(kind, t, estimator):
    if isinstance(kind, Pullback):
        if estimator != "gaussian":
            raise ValueError(
                "pulled-back ensembles support only the gaussian estimator")
        return _PullbackSetup(kind, t)
    return _EntriesSetup(kind, t)


def correlation_mc(kind, n=None, t=None, n_samples=100_000, seed=0,
                   estimator="spherical", chunk_count=DEFAULT_CHUNK_COUNT):
    """Two-point correlation K(t) by Monte Carlo.

    The spherical estimator averages |det xi||det eta| over independent
    uniform points on S^{2n-1}, one per component, with the radial integral
    folded in analytically; the gaussian estimator samples the conditioned
    Jacobian directly. Both target the same K.
    """
    if t is None:
        raise ValueError("separation t is required")
    if n is None:
        n = kind.n
    elif n != kind.n:
        raise ValueError(f"dimension {n} does not match the ensemble ({kind.n})")
    if n_samples < MIN_CORRELATION_SAMPLES:
        raise ValueError(f"need at least {MIN_CORRELATION_SAMPLES} samples")
    if estimator not in ("spherical", "gaussian"):
        raise ValueError(f"unknown estimator {estimator!r}")

    setup = _setup_for(kind, t, estimator)
    if estimator == "spherical":
        kernel = _spherical_kernel(setup)
        pref = setup.pref_spherical
    else:
        kernel = _gaussian_kernel(setup.transform, n)
        pref = setup.pref_gaussian
    mean, stderr, kept, dropped = _mc_run(kernel, 1, n_samples, seed, chunk_count)
    return McEstimate(mean=pref * mean[0], stderr=pref * stderr[0],
                      n_samples=kept, seed=seed, estimator=estimator,
                      chunk_count=chunk_count, nonfinite_count=dropped)


def correlation_joint_mc(kind_a, kind_b, t, n_samples, seed,
                         chunk_count=DEFAULT_CHUNK_COUNT):
    """K estimates for two same-dimension ensembles on common random numbers.

    Returns (difference, K_a, K_b) as McEstimates; the difference channel is
    per-sample, so its stderr reflects the coupling and is far smaller than
    the two marginal errors when the ensembles are close.
    """
    n = kind_a.n
    if kind_b.n != n:
        raise ValueError("ensembles must share the dimension")
    if n_samples < MIN_CORRELATION_SAMPLES:
        raise ValueError(f"need at least {MIN_CORRELATION_SAMPLES} samples")
    setup_a = _setup_for(kind_a, t, "gaussian")
    setup_b = _setup_for(kind_b, t, "gaussian")
    pa = setup_a.pref_gaussian
    pb = setup_b.pref_gaussian
    # Re-express both maps as the lower Cholesky factor of the conditional
    # covariance. That square root is unique, so close ensembles get close
    # pointwise maps and the difference channel is tightly coupled.
    lta = np.linalg.cholesky(setup_a.transform @ setup_a.transform.T).T.copy()
    ltb = np.linalg.cholesky(setup_b.transform @ setup_b.transform.T).T.copy()

    def kernel(rng, count):
        z = rng.standard_normal((count, n, 2 * n))
        ua = z @ lta
        ub = z @ ltb
        fa = pa * _absdet(ua[..., :n]) * _absdet(ua[..., n:])
        fb = pb * _absdet(ub[..., :n]) * _absdet(ub[..., n:])
        return np.stack([fa - fb, fa, fb], axis=1)

    mean, stderr, kept, dropped = _mc_run(kernel, 3, n_samples, seed, chunk_count)

    def est(i):
        return McEstimate(mean=mean[i], stderr=stderr[i], n_samples=kept,
                          seed=seed, estimator="gaussian-crn",
                          chunk_count=chunk_count, nonfinite_count=dropped)

    return est(0), est(1), est(2)


def density_mc(kind, n=None, n_samples=100_000, seed=0,
               chunk_count=DEFAULT_CHUNK_COUNT):
    """Zero density by the single-point Gaussian-integral estimator."""
    if n is None:
        n = kind.n
    elif n != kind.n:
        raise ValueError(f"dimension {n} does not match the ensemble ({kind.n})")
    cov = single_point_covariance(kind)
    block = cov[:n + 1, :n + 1]
    a = block[0, 0]
    if a <= 0:
        raise NotPositiveDefinite("value variance is not positive")
    g = block[1:, 0]
    cond = block[1:, 1:] - np.outer(g, g) / a
    try:
        transform = np.linalg.cholesky(cond)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("single-point covariance") from None
    sign, logdet_cov = np.linalg.slogdet(cov)
    if sign <= 0:
        raise NotPositiveDefinite("single-point covariance")
    _, logdet_cond = np.linalg.slogdet(cond)
    log_pref = (-0.5 * n * (n + 1) * math.log(2 * math.pi) - 0.5 * logdet_cov
                + 0.5 * n * n * math.log(2 * math.pi) + 0.5 * n * logdet_cond)
    pref = math.exp(log_pref)
    lt = transform.T.copy()

    def kernel(rng, count):
        xi = rng.standard_normal((count, n, n)) @ lt
        return _absdet(xi)[:, None]

    mean, stderr, kept, dropped = _mc_run(kernel, 1, n_samples, seed, chunk_count)
    return McEstimate(mean=pref * mean[0], stderr=pref * stderr[0],
                      n_samples=kept, seed=seed, estimator="gaussian",
                      chunk_count=chunk_count, nonfinite_count=dropped)


def parallelotope_moment_mc(n, k, n_samples=100_000, seed=0,
                            chunk_count=DEFAULT_CHUNK_COUNT):
    """k-th moment of the volume spanned by n iid uniform unit vectors."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")

    def kernel(rng, count):
        w = _unit_rows(rng.standard_normal((count, n, n)))
        return (_absdet(w) ** k)[:, None]

    mean, stderr, kept, dropped = _mc_run(kernel, 1, n_samples, seed, chunk_count)
    return McEstimate(mean=mean[0], stderr=stderr[0], n_samples=kept,
                      seed=seed, estimator="sphere-uniform",
                      chunk_count=chunk_count, nonfinite_count=dropped)


def sphere_det_integral_mc(n, n_samples=100_000, seed=0,
                           chunk_count=DEFAULT_CHUNK_COUNT):
    """Integral of det^2 over n copies of the unit sphere (surface measure)."""
    if n < 1:
        raise ValueError("need n >= 1")
    scale = specfun.sphere_area(n) ** n

    def kernel(rng, count):
        w = _unit_rows(rng.standard_normal((count, n, n)))
        d = _det(w)
        return (d * d)[:, None]

    mean, stderr, kept, dropped = _mc_run(kernel, 1, n_samples, seed, chunk_count)
    return McEstimate(mean=scale * mean[0], stderr=scale * stderr[0],
                      n_samples=kept, seed=seed, estimator="sphere-uniform",
                      chunk_count=chunk_count, nonfinite_count=dropped)


def _gaussian_factor(matrix, label):
    """(sampling transform, scale) for integrating against e^{-(Mu,u)/2}."""
    matrix = np.asarray(matrix, dtype=float)
    try:
        chol = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{label} matrix is not positive definite") from None
    transform = np.linalg.inv(chol).T
    dim = matrix.shape[0]
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    scale = math.exp(0.5 * dim * math.log(2 * math.pi) - 0.5 * logdet)
    return transform, scale


def perturbation_gap(n, a_matrix, b_matrix, n_samples=100_000, seed=0,
                     chunk_count=DEFAULT_CHUNK_COUNT):
    """|G(B) - G(A)| where G(M) integrates |det xi||det eta| e^{-(Mu,u)/2}.

    Both integrals are evaluated on common random numbers, so the per-sample
    difference carries the coupling and its stderr is the honest error of the
    gap, not of either integral.
    """
    ta, ca = _gaussian_factor(a_matrix, "reference")
    tb, cb = _gaussian_factor(b_matrix, "perturbed")
    if ta.shape[0] != 2 * n * n:
        raise ValueError("matrix size must be 2n^2")
    lta = ta.T.copy()
    ltb = tb.T.copy()

    def kernel(rng, count):
        z = rng.standard_normal((count, 2 * n * n))
        ua = (z @ lta).reshape(count, n, 2 * n)
        ub = (z @ ltb).reshape(count, n, 2 * n)
        fa = ca * _absdet(ua[..., :n]) * _absdet(ua[..., n:])
        fb = cb * _absdet(ub[..., :n]) * _absdet(ub[..., n:])
        return (fb - fa)[:, None]

    mean, stderr, kept, dropped = _mc_run(kernel, 1, n_samples, seed, chunk_count)
    return McEstimate(mean=abs(mean[0]), stderr=stderr[0], n_samples=kept,
                      seed=seed, estimator="gaussian-crn",
                      chunk_count=chunk_count, nonfinite_count=dropped)
