"""Pair covariance assembly, closed-form determinant and conditional quadratic
form, spectral decomposition, and the deterministic prefactors of the
zero-correlation integrals.

Two routes exist for every derived object: an authored closed form and a dense
linear-algebra oracle (high-precision LU / inversion). ``omega`` runs both and
refuses to return silently mismatched values.

The value/gradient vector ordering is component major:
``[h_1(x), grad h_1(x), h_1(y), grad h_1(y), h_2(x), ...]``. Deleting the value
rows means removing 1-based indices congruent to 1 modulo n+1; getting this
wrong silently corrupts every correlation downstream, so the index rule lives
in one function that doubles as the negative-control mutation hook.
"""

from dataclasses import dataclass

import numpy as np
from mpmath import mp

from .ensembles import (
    CovarianceEntries,
    IsomGaf,
    KostlanAffine,
    NormalizedG,
    ParabolaDeg3,
    Pullback,
    SyntheticIdentity,
    entries_for,
    pullback_point_covariance,
)
from .ensembles import DPS
from . import specfun

__all__ = [
    "NotPositiveDefinite",
    "DegenerateSpectrum",
    "PairCovariance",
    "OmegaMatrix",
    "Spectrum",
    "assemble_pair_covariance",
    "det_closed",
    "omega",
    "spectrum",
    "prefactor_identity_check",
    "density_closed",
    "point_density",
    "density_from_block",
    "single_point_covariance",
    "pd_max_separation",
]


class NotPositiveDefinite(ValueError):
    """The covariance fails the Cholesky pivot test; the correlation integral
    does not apply (coincident points, excessive separation, and so on)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DegenerateSpectrum(ValueError):
    """An eigenvalue denominator vanished (for example beta = +/- eta)."""


@dataclass(frozen=True)
class PairCovariance:
    """Block-diagonal pair covariance: n identical (2n+2) blocks."""

    n: int
    matrix: np.ndarray
    entries: CovarianceEntries = None
    source: object = None
    t: float = None

    @property
    def size(self):
        return 2 * self.n * (self.n + 1)


@dataclass(frozen=True)
class OmegaMatrix:
    """Conditional quadratic form after deleting the value rows of C^{-1}."""

    n: int
    matrix: np.ndarray
    tilde: np.ndarray
    oracle_rel_err: float


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of the conditional form with the orthogonal factor Q P.

    lambda1 and lambda2 each occur n-1 times per outer block, lambda3 and
    lambda4 once; for n = 1 the first two do not exist and are None.
    """

    n: int
    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    q: np.ndarray
    p: np.ndarray

    def diagonal(self):
        """Eigenvalues in the order produced by (QP)^T Omega (QP)."""
        per_pair = []
        for _ in range(self.n - 1):
            per_pair.extend([self.lambda1, self.lambda2])
        per_pair.extend([self.lambda3, self.lambda4])
        return np.array(per_pair * self.n)


def _require_dim(entries, n):
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if entries.beta_eta_placeholder and n != 1:
        raise ValueError("these entries come from a one-dimensional ensemble")


def _tilde_rows(entries, n):
    """The (2n+2)^2 pair block as nested mpf lists.

    Same-point blocks carry +delta at x and -delta at y; the cross block sits
    in the upper-right corner with the sign pattern [[mu, nu], [-nu, tau]] on
    the (value, last-derivative) corners.
    """
    a, b, g, d_, m_, nu, e, ta = (entries.alpha, entries.beta, entries.gamma,
                                  entries.delta, entries.mu, entries.nu,
                                  entries.eta, entries.tau)
    zero = mp.mpf(0)
    size = 2 * (n + 1)
    rows = [[zero for _ in range(size)] for _ in range(size)]

    def put(i, j, v):
        rows[i][j] = v
        rows[j][i] = v

    o = n + 1  # offset of the y half
    put(0, 0, a)
    put(o, o, a)
    put(0, n, d_)
    put(o, o + n, -d_)
    put(n, n, g)
    put(o + n, o + n, g)
    put(0, o, m_)
    put(0, o + n, nu)
    put(n, o, -nu)
    put(n, o + n, ta)
    for i in range(1, n):
        put(i, i, b)
        put(o + i, o + i, b)
        put(i, o + i, e)
    return rows


def _mp_tilde(entries, n):
    return mp.matrix(_tilde_rows(entries, n))


def assemble_pair_covariance(entries, n, source=None, t=None):
    """Lay the eight entries out as the full pair covariance matrix."""
    _require_dim(entries, n)
    with mp.workdps(DPS):
        rows = _tilde_rows(entries, n)
    size = 2 * (n + 1)
    tilde = np.array([[float(v) for v in row] for row in rows])
    full = np.zeros((n * size, n * size))
    for i in range(n):
        full[size * i:size * (i + 1), size * i:size * (i + 1)] = tilde
    return PairCovariance(n=n, matrix=full, entries=entries, source=source, t=t)


def _f1_f2(entries):
    """The two scalar determinant factors of the pair block."""
    a, b, g, d_, m_, nu, e, ta = (entries.alpha, entries.beta, entries.gamma,
                                  entries.delta, entries.mu, entries.nu,
                                  entries.eta, entries.tau)
    f1 = a * g - a * ta - d_ * d_ + 2 * d_ * nu + g * m_ - m_ * ta - nu * nu
    f2 = a * g + a * ta - d_ * d_ - 2 * d_ * nu - g * m_ - m_ * ta - nu * nu
    return f1, f2


def det_closed(entries, n):
    """Closed-form determinant of the pair covariance.

    May legitimately return a value <= 0; that signals the covariance is not
    positive definite at this separation.
    """
    _require_dim(entries, n)
    with mp.workdps(DPS):
        f1, f2 = _f1_f2(entries)
        bb = entries.beta * entries.beta - entries.eta * entries.eta
        return float(bb ** (n * (n - 1)) * f1 ** n * f2 ** n)


def _omega_corners(entries):
    """Closed-form corner values (omega_a, omega_b) of the conditional form."""
    a, g, d_, m_, nu, ta = (entries.alpha, entries.gamma, entries.delta,
                            entries.mu, entries.nu, entries.tau)
    Dl = (a * a * g * g - a * a * ta * ta - 2 * a * d_ * d_ * g
          + 4 * a * d_ * nu * ta - 2 * a * g * nu * nu + d_ ** 4
          + 2 * d_ * d_ * m_ * ta - 2 * d_ * d_ * nu * nu
          - 4 * d_ * g * m_ * nu - g * g * m_ * m_ + m_ * m_ * ta * ta
          + 2 * m_ * nu * nu * ta + nu ** 4)
    if Dl == 0:
        raise DegenerateSpectrum("determinant factor product vanished")
    wa = (a * a * g - a * d_ * d_ - a * nu * nu - 2 * d_ * m_ * nu
          - g * m_ * m_) / Dl
    wb = -(a * a * ta - 2 * a * d_ * nu - d_ * d_ * m_ - m_ * m_ * ta
           - m_ * nu * nu) / Dl
    return wa, wb


def _omega_tilde_rows(entries, n):
    wa, wb = _omega_corners(entries)
    zero = mp.mpf(0)
    size = 2 * n
    rows = [[zero for _ in range(size)] for _ in range(size)]
    if n > 1:
        bb = entries.beta * entries.beta - entries.eta * entries.eta
        if bb == 0:
            raise DegenerateSpectrum("beta^2 equals eta^2")
        bd = entries.beta / bb
        cd = -entries.eta / bb
        for i in range(n - 1):
            rows[i][i] = bd
            rows[n + i][n + i] = bd
            rows[i][n + i] = cd
            rows[n + i][i] = cd
    rows[n - 1][n - 1] = wa
    rows[2 * n - 1][2 * n - 1] = wa
    rows[n - 1][2 * n - 1] = wb
    rows[2 * n - 1][n - 1] = wb
    return rows


def _omega_keep_indices(total, n):
    """0-based indices that survive deleting the value rows.

    The deleted rows are the 1-based indices congruent to 1 modulo n+1, i.e.
    0-based multiples of n+1. Negative-control tests monkeypatch this.
    """
    return [i for i in range(total) if i % (n + 1) != 0]


def _mp_cholesky(a):
    """Lower Cholesky factor with the pivot failure rule.

    A leading pivot below 1e-12 times the largest diagonal entry counts as
    not positive definite.
    """
    size = a.rows
    maxdiag = max(a[i, i] for i in range(size))
    if maxdiag <= 0:
        raise NotPositiveDefinite("nonpositive diagonal")
    threshold = mp.mpf("1e-12") * maxdiag
    L = mp.zeros(size, size)
    for j in range(size):
        s = a[j, j]
        for k in range(j):
            s -= L[j, k] ** 2
        if s < threshold:
            raise NotPositiveDefinite(f"pivot {float(s):g} below threshold at column {j}")
        L[j, j] = mp.sqrt(s)
        for i in range(j + 1, size):
            v = a[i, j]
            for k in range(j):
                v -= L[i, k] * L[j, k]
            L[i, j] = v / L[j, j]
    return L


def omega(pc):
    """Conditional quadratic form, computed two ways and cross-checked.

    The dense route inverts the pair block and deletes the value rows; the
    closed route fills the known sparse structure. Disagreement beyond 1e-10
    relative raises, since it means one of the conventions is corrupted.
    """
    if pc.entries is None:
        raise ValueError("omega needs an entries-backed pair covariance")
    n = pc.n
    with mp.workdps(DPS):
        tilde = _mp_tilde(pc.entries, n)
        _mp_cholesky(tilde)  # positive definiteness gate
        inv = tilde ** -1
        keep = _omega_keep_indices(2 * (n + 1), n)
        dense = [[inv[i, j] for j in keep] for i in keep]
        closed = _omega_tilde_rows(pc.entries, n)
        scale = max(abs(v) for row in closed for v in row)
        err = max(abs(closed[i][j] - dense[i][j])
                  for i in range(2 * n) for j in range(2 * n))
        rel = float(err / scale)
        if rel > 1e-10:
            raise ArithmeticError(
                f"closed-form and dense conditional forms disagree ({rel:g} relative)")
        tilde_f = np.array([[float(v) for v in row] for row in closed])
    size = 2 * n
    full = np.zeros((n * size, n * size))
    for i in range(n):
        full[size * i:size * (i + 1), size * i:size * (i + 1)] = tilde_f
    return OmegaMatrix(n=n, matrix=full, tilde=tilde_f, oracle_rel_err=rel)


def _lambdas_mp(entries, n):
    """Closed-form eigenvalues as mpf, in (lambda1, lambda2, lambda3, lambda4) order."""
    f1, f2 = _f1_f2(entries)
    if f1 == 0 or f2 == 0:
        raise DegenerateSpectrum("determinant factor vanished")
    l3 = (entries.alpha + entries.mu) / f1
    l4 = (entries.alpha - entries.mu) / f2
    if n == 1:
        return None, None, l3, l4
    bm = entries.beta - entries.eta
    bp = entries.beta + entries.eta
    if bm == 0 or bp == 0:
        raise DegenerateSpectrum("beta equals +/- eta")
    return 1 / bm, 1 / bp, l3, l4


def spectrum(entries, n):
    """Closed-form eigen decomposition of the conditional quadratic form.

    Q pairs each gradient row coordinate of x with the matching coordinate of
    y; P rotates every pair by 45 degrees. For n = 1 only lambda3 and lambda4
    exist.
    """
    _require_dim(entries, n)
    with mp.workdps(DPS):
        l1, l2, l3, l4 = _lambdas_mp(entries, n)
        lam = [None if v is None else float(v) for v in (l1, l2, l3, l4)]

    qb = np.zeros((2 * n, 2 * n))
    for j in range(n):
        qb[j, 2 * j] = 1.0
        qb[n + j, 2 * j + 1] = 1.0
    s = np.sqrt(2.0) / 2.0
    rot = np.array([[-s, s], [s, s]])
    pb = np.zeros((2 * n, 2 * n))
    for j in range(n):
        pb[2 * j:2 * j + 2, 2 * j:2 * j + 2] = rot
    eye = np.eye(n)
    return Spectrum(n=n, lambda1=lam[0], lambda2=lam[1], lambda3=lam[2],
                    lambda4=lam[3], q=np.kron(eye, qb), p=np.kron(eye, pb))


def prefactor_identity_check(entries, n):
    """Both sides of the prefactor collapse identity.

    Left: (lambda1 lambda2)^{-n(n-1)/2} (lambda3 lambda4)^{-n/2} / sqrt(det C).
    Right: (alpha^2 - mu^2)^{-n/2}. Returns (lhs, rhs) as floats; they agree
    to 1e-10 relative on any admissible input because the identity is exact.
    """
    _require_dim(entries, n)
    with mp.workdps(DPS):
        am = entries.alpha ** 2 - entries.mu ** 2
        if am == 0:
            raise DegenerateSpectrum("alpha^2 equals mu^2 (coincident points)")
        l1, l2, l3, l4 = _lambdas_mp(entries, n)
        f1, f2 = _f1_f2(entries)
        bb = entries.beta * entries.beta - entries.eta * entries.eta
        det = bb ** (n * (n - 1)) * f1 ** n * f2 ** n
        if det <= 0 or l3 * l4 <= 0:
            raise NotPositiveDefinite("pair covariance is not positive definite")
        lhs = (l3 * l4) ** (-mp.mpf(n) / 2) / mp.sqrt(det)
        if n > 1:
            lhs *= (l1 * l2) ** (-mp.mpf(n * (n - 1)) / 2)
        rhs = am ** (-mp.mpf(n) / 2)
        return float(lhs), float(rhs)


def point_density(entries, n):
    """Zero density at either of the two pair points, from the same-point block.

    By the symmetric placement of the points the density is the same at both.
    """
    _require_dim(entries, n)
    with mp.workdps(DPS):
        a, b, g, d_ = entries.alpha, entries.beta, entries.gamma, entries.delta
        inner = b ** (n - 1) * (g - d_ * d_ / a) / a ** n
        if inner <= 0:
            raise NotPositiveDefinite("same-point block is not positive definite")
        c = mp.gamma((n + 1) / mp.mpf(2)) / mp.pi ** ((n + 1) / mp.mpf(2))
        return float(c * mp.sqrt(inner))


def density_from_block(block):
    """Zero density from a dense single-point covariance block [[a, g^T], [g, G]]."""
    block = np.asarray(block, dtype=float)
    n = block.shape[0] - 1
    a = block[0, 0]
    if a <= 0:
        raise NotPositiveDefinite("value variance is not positive")
    g = block[1:, 0]
    cond = block[1:, 1:] - np.outer(g, g) / a
    det = np.linalg.det(cond)
    if det <= 0:
        raise NotPositiveDefinite("conditioned gradient covariance is singular")
    c = specfun.gamma((n + 1) / 2.0) / np.pi ** ((n + 1) / 2.0)
    return c * np.sqrt(det / a ** n)


def density_closed(kind):
    """Constant zero density of the two invariant ensembles."""
    if isinstance(kind, KostlanAffine):
        n, d = kind.n, kind.d
        return (specfun.gamma((n + 1) / 2.0)
                / np.pi ** ((n + 1) / 2.0) * d ** (n / 2.0))
    if isinstance(kind, IsomGaf):
        n = kind.n
        return specfun.gamma((n + 1) / 2.0) / np.pi ** ((n + 1) / 2.0)
    raise ValueError(f"no closed-form density for {type(kind).__name__}")


def single_point_covariance(kind):
    """Covariance of (value, gradient) per component at a single point.

    Returned as the full n(n+1) matrix across the n components, evaluated at
    the origin of the chart.
    """
    if isinstance(kind, (IsomGaf, NormalizedG, SyntheticIdentity)):
        n = kind.n
        return np.eye(n * (n + 1))
    if isinstance(kind, KostlanAffine):
        n = kind.n
        block = np.diag([1.0] + [float(kind.d)] * n)
    elif isinstance(kind, ParabolaDeg3):
        n = 1
        block = np.diag([1.0, 3.0])
    elif isinstance(kind, Pullback):
        n = kind.n
        block = pullback_point_covariance(kind, np.zeros(n))
    else:
        raise ValueError(f"unsupported kind {type(kind).__name__}")
    full = np.zeros((n * (n + 1), n * (n + 1)))
    for i in range(n):
        full[(n + 1) * i:(n + 1) * (i + 1), (n + 1) * i:(n + 1) * (i + 1)] = block
    return full


def _is_pd(kind, t):
    try:
        entries = entries_for(kind, t)
        with mp.workdps(DPS):
            _mp_cholesky(_mp_tilde(entries, getattr(kind, "n", 1)))
        return True
    except NotPositiveDefinite:
        return False


def pd_max_separation(kind, t_hi=4.0, tol=1e-4):
    """Largest separation (up to t_hi) where the pair covariance stays
    positive definite, found by bisection. Diagnostic; no closed form for the
    boundary is claimed."""
    lo = min(0.05, t_hi / 2)
    if not _is_pd(kind, lo):
        raise NotPositiveDefinite(f"not positive definite even at t={lo}", t=lo)
    if _is_pd(kind, t_hi):
        return t_hi
    hi = t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _is_pd(kind, mid):
            lo = mid
        else:
            hi = mid
    return lo
