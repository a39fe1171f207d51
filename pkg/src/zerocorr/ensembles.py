"""Covariance data for every supported Gaussian ensemble.

Each ensemble is described, for a pair of points at separation t placed
symmetrically on the last coordinate axis, by eight scalar covariances
(``CovarianceEntries``). The closed forms are evaluated in high-precision
arithmetic because downstream determinant factors cancel catastrophically at
small separation; the entries therefore carry mpmath reals, which mix freely
with floats (use ``float(...)`` at the edges).

The pull-back ensemble has no eight-entry reduction; ``entries_pullback``
computes its full pair covariance matrix by direct summation over ambient
multi-indices, which doubles as the independent oracle for the closed forms.
"""

from dataclasses import dataclass, field

import numpy as np
from mpmath import mp

__all__ = [
    "CovarianceEntries",
    "PullbackSpec",
    "KostlanAffine",
    "IsomGaf",
    "NormalizedG",
    "ParabolaDeg3",
    "Pullback",
    "SyntheticIdentity",
    "entries_kostlan",
    "entries_isom",
    "entries_g",
    "entries_parabola",
    "entries_identity",
    "entries_for",
    "entries_kostlan_rescaled",
    "entries_pullback",
    "pullback_point_covariance",
    "psi_zero",
    "psi_square",
]

# Working precision (decimal digits) for all closed-form scalar pipelines.
DPS = 50


@dataclass(frozen=True)
class CovarianceEntries:
    """The eight pair covariances alpha..tau at a fixed separation.

    alpha, delta, gamma describe the same-point block (value, value/derivative,
    derivative/derivative along the separation axis), beta the transverse
    derivative variance; mu, nu, eta, tau are their cross-point counterparts.
    nu is the raw cross covariance of the value at one point with the
    separation-axis derivative at the other, with no extra sign convention.

    Values are mpmath reals. ``beta_eta_placeholder`` marks entries from a
    one-dimensional ensemble where beta and eta do not occur and are stored
    as 1 so that formulas raising them to the power n-1 stay valid.
    """

    alpha: object
    beta: object
    gamma: object
    delta: object
    mu: object
    nu: object
    eta: object
    tau: object
    beta_eta_placeholder: bool = False

    def floats(self):
        """The eight entries as Python floats, in field order."""
        return (
            float(self.alpha), float(self.beta), float(self.gamma),
            float(self.delta), float(self.mu), float(self.nu),
            float(self.eta), float(self.tau),
        )


@dataclass(frozen=True)
class PullbackSpec:
    """Polynomial graph map psi: R^n -> R^{k-n} as coefficient tables.

    ``components[j]`` maps an exponent multi-index (length n tuple) to the
    coefficient of the corresponding monomial in psi_{j+1}. Constant and
    linear terms must be absent (the graph passes through the origin with a
    flat tangent there) and the total degree is capped at 4.
    """

    n: int
    k: int
    components: tuple = field(default=())

    def __post_init__(self):
        if not (1 <= self.n < self.k):
            raise ValueError(f"need 1 <= n < k, got n={self.n}, k={self.k}")
        comps = tuple(dict(c) for c in self.components)
        if len(comps) != self.k - self.n:
            raise ValueError(
                f"psi needs {self.k - self.n} components, got {len(comps)}")
        for j, comp in enumerate(comps):
            for idx, coeff in comp.items():
                if len(idx) != self.n or any(e < 0 for e in idx):
                    raise ValueError(f"bad multi-index {idx} in component {j}")
                deg = sum(idx)
                if deg > 4:
                    raise ValueError(f"degree {deg} > 4 in component {j}")
                if deg < 2 and coeff != 0.0:
                    raise ValueError(
                        "psi must vanish to second order at the origin; "
                        f"component {j} has a degree-{deg} term")
        object.__setattr__(self, "components", comps)

    def value(self, x):
        """psi(x) as a (k-n,) array."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.k - self.n)
        for j, comp in enumerate(self.components):
            for idx, coeff in comp.items():
                out[j] += coeff * np.prod(x ** np.array(idx))
        return out

    def jacobian(self, x):
        """Dpsi(x) as a (k-n, n) array."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.k - self.n, self.n))
        for j, comp in enumerate(self.components):
            for idx, coeff in comp.items():
                for i, e in enumerate(idx):
                    if e == 0:
                        continue
                    term = coeff * e
                    for l, el in enumerate(idx):
                        p = el - 1 if l == i else el
                        term *= x[l] ** p
                    out[j, i] += term
        return out


def psi_zero(n=1, k=2):
    """The flat graph map, psi identically zero."""
    return PullbackSpec(n=n, k=k, components=tuple({} for _ in range(k - n)))


def psi_square():
    """The standard curved test map x -> x^2 from R^1 into R^2."""
    return PullbackSpec(n=1, k=2, components=({(2,): 1.0},))


# --- ensemble kinds -------------------------------------------------------

@dataclass(frozen=True)
class KostlanAffine:
    """Rotation-invariant polynomial ensemble in its affine chart."""
    n: int
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.d < 3:
            # positive definiteness of the pair covariance needs degree >= 3
            raise ValueError(f"degree must be >= 3, got {self.d}")


@dataclass(frozen=True)
class IsomGaf:
    """Translation/rotation invariant Gaussian analytic function, kernel e^{x.y}."""
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")


@dataclass(frozen=True)
class NormalizedG:
    """The GAF damped by the Gaussian weight; same zeros, stationary unit kernel."""
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")


@dataclass(frozen=True)
class ParabolaDeg3:
    """Degree-3 ensemble restricted to the parabola y = b x^2 (dimension 1)."""
    b: float

    @property
    def n(self):
        return 1


@dataclass(frozen=True)
class Pullback:
    """Degree-d ensemble on R^k pulled back to the graph of psi."""
    k: int
    n: int
    d: int
    psi: PullbackSpec

    def __post_init__(self):
        if not (1 <= self.n < self.k <= 3):
            raise ValueError(f"need 1 <= n < k <= 3, got n={self.n}, k={self.k}")
        if not (3 <= self.d <= 512):
            raise ValueError(f"degree must be in [3, 512], got {self.d}")
        if self.psi.n != self.n or self.psi.k != self.k:
            raise ValueError("psi dimensions do not match the ensemble")


@dataclass(frozen=True)
class SyntheticIdentity:
    """Test fixture with identity pair covariance at every separation."""
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")


def _check_t(t):
    if not (t > 0):
        raise ValueError(f"pair entries need separation t > 0, got {t}")


def entries_kostlan(n, d, t):
    """Pair covariances of the degree-d rotation-invariant ensemble.

    Points sit at -t/2 and t/2 on the last axis; the kernel is
    (1 + x.y)^d. t = 2 is allowed (the cross entries all vanish there).
    """
    if d < 3:
        raise ValueError(f"degree must be >= 3, got {d}")
    _check_t(t)
    with mp.workdps(DPS):
        tt = mp.mpf(t)
        p = 1 + tt * tt / 4
        q = 1 - tt * tt / 4
        if q != 0 and abs(q) < mp.mpf("1e-300"):
            raise ValueError(f"1 - t^2/4 underflows at t={t}")
        alpha = p ** d
        delta = -d * (tt / 2) * p ** (d - 1)
        beta = d * p ** (d - 1)
        gamma = d * p ** (d - 1) + d * (d - 1) * (tt * tt / 4) * p ** (d - 2)
        mu = q ** d
        nu = -d * (tt / 2) * q ** (d - 1)
        eta = d * q ** (d - 1)
        tau = d * q ** (d - 1) - d * (d - 1) * (tt * tt / 4) * q ** (d - 2)
    return CovarianceEntries(alpha, beta, gamma, delta, mu, nu, eta, tau)


def entries_isom(n, t):
    """Pair covariances of the invariant GAF with kernel e^{x.y}."""
    _check_t(t)
    with mp.workdps(DPS):
        tt = mp.mpf(t)
        a = mp.e ** (tt * tt / 4)
        m = mp.e ** (-tt * tt / 4)
        alpha = a
        delta = -(tt / 2) * a
        beta = a
        gamma = (1 + tt * tt / 4) * a
        mu = m
        nu = -(tt / 2) * m
        eta = m
        tau = (1 - tt * tt / 4) * m
    return CovarianceEntries(alpha, beta, gamma, delta, mu, nu, eta, tau)


def entries_g(n, t):
    """Pair covariances of the Gaussian-damped GAF (stationary kernel e^{-|x-y|^2/2})."""
    _check_t(t)
    with mp.workdps(DPS):
        tt = mp.mpf(t)
        m = mp.e ** (-tt * tt / 2)
        one = mp.mpf(1)
        alpha = one
        beta = one
        gamma = one
        delta = mp.mpf(0)
        mu = m
        nu = -tt * m
        eta = m
        tau = (1 - tt * tt) * m
    return CovarianceEntries(alpha, beta, gamma, delta, mu, nu, eta, tau)


def entries_parabola(b, t):
    """Pair covariances of the degree-3 ensemble restricted to y = b x^2.

    One-dimensional; beta and eta are placeholders (see CovarianceEntries).
    nu is stored as the raw kernel cross-derivative, so that b = 0 reproduces
    entries_kostlan(1, 3, t) entry for entry.
    """
    _check_t(t)
    with mp.workdps(DPS):
        bb = mp.mpf(b)
        tt = mp.mpf(t)
        b2 = bb * bb
        t2 = tt * tt
        t4 = t2 * t2
        t6 = t4 * t2
        alpha = (b2 * t4 + 4 * t2 + 16) ** 3 / 4096
        delta = -3 * tt * (b2 * t2 + 2) * (b2 * t4 + 4 * t2 + 16) ** 2 / 1024
        mu = (b2 * t4 - 4 * t2 + 16) ** 3 / 4096
        gamma = (3 * b2 * t4 + 12 * t2 + 48) * (
            3 * b2 * b2 * t6 + 13 * b2 * t4 + 16 * b2 * t2 + 12 * t2 + 16) / 256
        nu = 3 * tt * (b2 * t2 - 2) * (b2 * t4 - 4 * t2 + 16) ** 2 / 1024
        tau = -(3 * b2 * t4 - 12 * t2 + 48) * (
            3 * b2 * b2 * t6 - 13 * b2 * t4 + 16 * b2 * t2 + 12 * t2 - 16) / 256
        one = mp.mpf(1)
    return CovarianceEntries(alpha, one, gamma, delta, mu, nu, one, tau,
                             beta_eta_placeholder=True)


def entries_identity(n, t=None):
    """Identity-covariance fixture entries; t is accepted and ignored."""
    with mp.workdps(DPS):
        one = mp.mpf(1)
        zero = mp.mpf(0)
    return CovarianceEntries(one, one, one, zero, zero, zero, zero, zero)


def entries_for(kind, t):
    """Dispatch pair entries for an ensemble kind at separation t.

    Pullback has no eight-entry form; use entries_pullback for it.
    """
    if isinstance(kind, KostlanAffine):
        return entries_kostlan(kind.n, kind.d, t)
    if isinstance(kind, IsomGaf):
        return entries_isom(kind.n, t)
    if isinstance(kind, NormalizedG):
        return entries_g(kind.n, t)
    if isinstance(kind, ParabolaDeg3):
        return entries_parabola(kind.b, t)
    if isinstance(kind, SyntheticIdentity):
        return entries_identity(kind.n, t)
    raise TypeError(f"no eight-entry covariance for {type(kind).__name__}")


def entries_kostlan_rescaled(n, d, t):
    """Degree-d entries at separation t/sqrt(d) in slow variables.

    Derivative entries are divided by sqrt(d) once per differentiation. As d
    grows these converge to entries_isom(n, t) at rate 1/d.
    """
    e = entries_kostlan(n, d, t / np.sqrt(d))
    with mp.workdps(DPS):
        s = mp.sqrt(d)
        return CovarianceEntries(
            e.alpha, e.beta / d, e.gamma / d, e.delta / s,
            e.mu, e.nu / s, e.eta / d, e.tau / d)


# --- pull-back covariance by direct summation -----------------------------

def _ambient_map(psi, x):
    """P(x) = (x, psi(x)) and its Jacobian rows for the graph embedding."""
    x = np.asarray(x, dtype=float)
    n = psi.n
    k = psi.k
    P = np.empty(k)
    P[:n] = x
    P[n:] = psi.value(x)
    J = np.zeros((k, n))
    J[:n, :] = np.eye(n)
    J[n:, :] = psi.jacobian(x)
    return P, J


def _pair_sums(d, Px, Jx, Py, Jy):
    """Sums over ambient multi-indices B with |B| <= d of
    multinomial(d; B) * M_B and its gradients, where M_B(x) = prod P_l(x)^{B_l}.

    Weights are maintained by the ratio recurrence w(B+e_l) = w(B) (d-|B|)/(B_l+1),
    and monomial gradients by the product rule, so no factorials or divisions
    by possibly-zero coordinates ever appear.
    """
    k = len(Px)
    n = Jx.shape[1]
    acc00 = np.zeros(())
    accx0 = np.zeros(n)
    acc0y = np.zeros(n)
    accxy = np.zeros((n, n))

    def walk(level, w, rem, mx, gx, my, gy):
        if level == k:
            acc00[()] += w * mx * my
            accx0[...] += (w * my) * gx
            acc0y[...] += (w * mx) * gy
            accxy[...] += w * np.outer(gx, gy)
            return
        b = 0
        cw = w
        r = rem
        cmx, cgx, cmy, cgy = mx, gx, my, gy
        while True:
            walk(level + 1, cw, r, cmx, cgx, cmy, cgy)
            if r == 0:
                break
            cw = cw * r / (b + 1)
            r -= 1
            b += 1
            cgx = cgx * Px[level] + cmx * Jx[level]
            cmx = cmx * Px[level]
            cgy = cgy * Py[level] + cmy * Jy[level]
            cmy = cmy * Py[level]

    walk(0, 1.0, d, 1.0, np.zeros(n), 1.0, np.zeros(n))
    return float(acc00), accx0, acc0y, accxy


def _point_pair_block(d, Px, Jx, Py, Jy, n):
    s00, sx0, s0y, sxy = _pair_sums(d, Px, Jx, Py, Jy)
    blk = np.empty((n + 1, n + 1))
    blk[0, 0] = s00
    blk[0, 1:] = s0y
    blk[1:, 0] = sx0
    blk[1:, 1:] = sxy
    return blk


def pullback_point_covariance(kind, x):
    """Single-point covariance of (value, gradient) for the pull-back field at x."""
    Px, Jx = _ambient_map(kind.psi, x)
    return _point_pair_block(kind.d, Px, Jx, Px, Jx, kind.n)


def entries_pullback(kind, x, y):
    """Full pair covariance matrix of the pull-back ensemble at points x, y.

    Returns the 2n(n+1) square matrix in the component-major vector ordering
    (value and gradient at x, then at y, repeated for each of the n field
    components). Term count is O(d^k); the enumeration is a fixed-order
    recurrence, so the result is deterministic.
    """
    if not isinstance(kind, Pullback):
        raise TypeError("entries_pullback needs a Pullback ensemble")
    n = kind.n
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (n,) or y.shape != (n,):
        raise ValueError(f"points must be length-{n} vectors")
    Px, Jx = _ambient_map(kind.psi, x)
    Py, Jy = _ambient_map(kind.psi, y)
    axx = _point_pair_block(kind.d, Px, Jx, Px, Jx, n)
    ayy = _point_pair_block(kind.d, Py, Jy, Py, Jy, n)
    bxy = _point_pair_block(kind.d, Px, Jx, Py, Jy, n)
    if not np.all(np.isfinite(axx)) or not np.all(np.isfinite(ayy)) \
            or not np.all(np.isfinite(bxy)):
        raise ArithmeticError("non-finite accumulation in pull-back covariance")
    m = n + 1
    tilde = np.empty((2 * m, 2 * m))
    tilde[:m, :m] = axx
    tilde[:m, m:] = bxy
    tilde[m:, :m] = bxy.T
    tilde[m:, m:] = ayy
    full = np.zeros((2 * n * m, 2 * n * m))
    for i in range(n):
        full[2 * m * i:2 * m * (i + 1), 2 * m * i:2 * m * (i + 1)] = tilde
    return full
