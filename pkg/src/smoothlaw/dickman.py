"""Dickman-type special functions from the delay-differential layer.

rho solves t rho'(t) = -rho(t-1) with rho = 1 on [0, 1]; its convolution
square rho2 solves t rho2'(t) - rho2(t) + 2 rho2(t-1) = 0 with rho2(t) = t
on [0, 1].  Both are represented piecewise on unit intervals [k, k+1] by
Chebyshev polynomials obtained by integrating the delay equation against
the previous piece, which reproduces the closed forms on [1, 2] to near
machine precision.

The companion function xi(t) is the positive root of e^xi = 1 + t*xi
(xi(1) = 0); it drives every asymptotic form here:

    rho_hat(-s)   = int_0^inf rho(v) e^(v s) dv = exp(gamma + I(s)),
    I(s)          = int_0^s (e^v - 1) dv / v,
    lambda(s, t)  = int_0^s rho(v) e^(v xi(t)) dv,
    kappa(u, w)   = lambda(w, u) / rho_hat(-xi(u)),
    nu(t)         = rho2(t) / (rho(t) lambda(t, t)).

Every integral with an e^(v xi) factor is evaluated in log scale with a
max shift, so nothing overflows up to the grid horizon even though the
integrand spans hundreds of orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .errors import DomainError, SolverError

EULER_GAMMA = 0.5772156649015329

_CHEB_DEGREE = 24
_GL_NODES = 64


@dataclass(frozen=True)
class XiValue:
    """Root of e^xi = 1 + t*xi together with its derivative in t."""

    t: float
    xi: float
    xi_prime: float


def xi(t: float) -> XiValue:
    """Positive solution of e^xi = 1 + t*xi; xi(1) = 0, xi'(1) = 2.

    Residual |e^xi - 1 - t xi| stays below 1e-13 * (1 + t xi); strictly
    increasing in t.
    """
    t = float(t)
    if t < 1:
        raise DomainError(f"xi is defined for t >= 1, got {t}")
    delta = t - 1
    if delta <= 1e-8:
        # e^xi = 1 + t xi expands to xi = 2 delta - (4/3) delta^2 + O(delta^3)
        x = 2 * delta - (4.0 / 3.0) * delta * delta
        return XiValue(t=t, xi=x, xi_prime=2.0 - (8.0 / 3.0) * delta)

    def f(x):
        return (math.expm1(x) - x) - delta * x

    # f < 0 at log t, f -> +inf; keep a bracket around the positive root.
    lo = math.log(t)
    x0 = lo + math.log(lo) if t >= math.e else max(2 * delta, 0.5 * lo)
    hi = max(x0, lo)
    while f(hi) <= 0:
        hi = 2 * hi + 1
        if hi > 1e4:
            raise SolverError(f"xi bracket expansion failed at t={t}")
    x = min(max(x0, lo), hi)
    converged = False
    for _ in range(120):
        fx = f(x)
        scale = 1 + t * x
        if abs(fx) <= 1e-13 * scale:
            converged = True
            break
        if fx > 0:
            hi = x
        else:
            lo = x
        step = fx / (math.exp(x) - t)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            converged = abs(fx) <= 1e-11 * scale
            break
        x = x_new
    if not converged:
        raise SolverError(f"xi Newton failed to converge at t={t}")
    # implicit differentiation: xi' = xi / (e^xi - t), with e^xi - t
    # computed as expm1(xi) - (t - 1) to dodge cancellation near t = 1.
    return XiValue(t=t, xi=x, xi_prime=x / (math.expm1(x) - delta))


def xi_prime(t: float) -> float:
    """Derivative of xi; equals 2 at t = 1 by continuous extension."""
    return xi(t).xi_prime


def _xi_ext(t: float) -> float:
    """xi extended by 0 below its domain (rho is constant there)."""
    return 0.0 if t <= 1 else xi(t).xi


def _xi_prime_ext(t: float) -> float:
    return 0.0 if t <= 1 else xi(t).xi_prime


def I_fn(s: float) -> float:
    """I(s) = int_0^s (e^v - 1)/v dv, summed termwise: sum s^k / (k * k!)."""
    s = float(s)
    if s < 0:
        raise DomainError(f"I(s) is used for s >= 0 only, got {s}")
    if s == 0:
        return 0.0
    total = 0.0
    power = 1.0  # s^k / k!
    for k in range(1, 10_000):
        power *= s / k
        term = power / k
        total += term
        if term < 1e-16 * total:
            return total
    raise SolverError(f"I(s) series did not converge at s={s}")


def log_rho_hat_neg(s: float) -> float:
    """log of the Laplace transform value rho_hat(-s) = exp(gamma + I(s))."""
    return EULER_GAMMA + I_fn(s)


def rho_hat_neg(s: float) -> float:
    """rho_hat(-s) = int_0^inf rho(v) e^(v s) dv = exp(gamma + I(s))."""
    return math.exp(log_rho_hat_neg(s))


def normal_cdf(h: float) -> float:
    """Standard normal distribution function, absolute error <= 1e-12."""
    return 0.5 * math.erfc(-float(h) / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Piecewise-Chebyshev grid for rho and rho2
# ---------------------------------------------------------------------------


class DickmanGrid:
    """Piecewise polynomial model of rho and rho2 on [0, t_max].

    Stepping uses the cancellation-free mean-value forms of the two delay
    equations,

        t rho(t)  =     int_(t-1)^t rho(v)  dv,
        t rho2(t) = 2 * int_(t-1)^t rho2(v) dv,

    whose integrands are positive, so relative accuracy survives the
    enormous decay (the naive form rho(k) - int ... loses a factor
    e^xi(k) of relative precision per interval to cancellation).  On each
    unit interval the implicit integral equation is solved by collocation
    at Chebyshev points, a dense (degree+1)-square linear system.

    Each interval stores Chebyshev coefficients of f(t)/f(k) together with
    the accumulated log scale, so log values never underflow however far
    the grid extends.  Built once; immutable reads.
    """

    def __init__(self, t_max: int = 100, degree: int = _CHEB_DEGREE):
        if t_max < 2:
            raise DomainError(f"t_max must be >= 2, got {t_max}")
        self.t_max = int(t_max)
        self.degree = int(degree)
        # Collocation machinery shared by all intervals: values at first-kind
        # Chebyshev points, and the matrix Q mapping node values of f to node
        # values of int_(-1)^x f.
        x = _cheb.chebpts1(degree + 1)
        vander = _cheb.chebvander(x, degree)
        q = np.empty((degree + 1, degree + 1))
        for j in range(degree + 1):
            coefs = np.linalg.solve(vander, np.eye(degree + 1)[:, j])
            q[:, j] = _cheb.chebval(x, _cheb.chebint(coefs, lbnd=-1.0, k=0.0))
        self._nodes = x
        self._vander = vander
        self._q = q
        self._rho_coef = [np.array([1.0])]
        self._rho_logscale = [0.0]
        self._rho2_coef = [np.array([0.5, 0.5])]  # rho2(t) = t on [0, 1]
        self._rho2_logscale = [0.0]
        for k in range(1, self.t_max):
            self._extend(k, self._rho_coef, self._rho_logscale, 1.0)
            self._extend(k, self._rho2_coef, self._rho2_logscale, 2.0)

    # -- construction -------------------------------------------------------

    def _extend(self, k: int, coef_list, logscale_list, mult: float) -> None:
        """Fit f/f(k) on [k, k+1] from t f(t) = mult * int_(t-1)^t f."""
        prev = coef_list[k - 1]
        ratio = float(_cheb.chebval(1.0, prev))  # f(k)/f(k-1), in prev scale
        logscale_list.append(logscale_list[-1] + math.log(ratio))
        x = self._nodes
        t = k + (x + 1.0) / 2.0
        # Known part: mult/t * int_(t-1)^k f, over the previous piece, in the
        # new scale f(k); the local coordinate of t-1 in [k-1, k] is again x.
        g_coef = _cheb.chebint(prev, lbnd=-1.0, k=0.0)
        g_full = float(_cheb.chebval(1.0, g_coef))
        known = (mult / t) * (g_full - _cheb.chebval(x, g_coef)) / (2.0 * ratio)
        # Implicit part: (mult/t) * (1/2) Q acting on the unknown node values.
        a = np.eye(self.degree + 1) - (mult / (2.0 * t))[:, None] * self._q
        vals = np.linalg.solve(a, known)
        coef_list.append(np.linalg.solve(self._vander, vals))

    # -- evaluation ---------------------------------------------------------

    def _locate(self, t: float) -> tuple[int, float]:
        if t > self.t_max:
            raise DomainError(
                f"t={t} beyond grid horizon {self.t_max}; rebuild with a larger t_max"
            )
        k = min(int(math.floor(t)), self.t_max - 1)
        return k, 2.0 * (t - k) - 1.0

    def rho(self, t: float) -> float:
        """Dickman rho; 1 on [0, 1], 0 for t < 0."""
        t = float(t)
        if t < 0:
            return 0.0
        if t <= 1:
            return 1.0
        k, x = self._locate(t)
        return math.exp(self._rho_logscale[k]) * float(_cheb.chebval(x, self._rho_coef[k]))

    def log_rho(self, t: float) -> float:
        t = float(t)
        if t < 0:
            raise DomainError("rho vanishes for t < 0; no log value")
        if t <= 1:
            return 0.0
        k, x = self._locate(t)
        return self._rho_logscale[k] + math.log(float(_cheb.chebval(x, self._rho_coef[k])))

    def rho_deriv(self, t: float) -> float:
        t = float(t)
        if t < 0 or t > self.t_max:
            raise DomainError(f"rho' sampled outside (0, {self.t_max}]")
        k, x = self._locate(t)
        d = _cheb.chebval(x, _cheb.chebder(self._rho_coef[k])) * 2.0
        return math.exp(self._rho_logscale[k]) * float(d)

    def rho2(self, t: float) -> float:
        """Convolution square of rho; equals t on [0, 1], 0 for t < 0."""
        t = float(t)
        if t < 0:
            return 0.0
        k, x = self._locate(t)
        return math.exp(self._rho2_logscale[k]) * float(_cheb.chebval(x, self._rho2_coef[k]))

    def log_rho2(self, t: float) -> float:
        t = float(t)
        if t <= 0:
            raise DomainError("rho2 vanishes for t <= 0; no log value")
        k, x = self._locate(t)
        return self._rho2_logscale[k] + math.log(
            float(_cheb.chebval(x, self._rho2_coef[k]))
        )

    def rho2_deriv(self, t: float) -> float:
        t = float(t)
        if t < 0 or t > self.t_max:
            raise DomainError(f"rho2' sampled outside (0, {self.t_max}]")
        k, x = self._locate(t)
        d = _cheb.chebval(x, _cheb.chebder(self._rho2_coef[k])) * 2.0
        return math.exp(self._rho2_logscale[k]) * float(d)

    def _log_rho_nodes(self, v: np.ndarray, k: int) -> np.ndarray:
        x = 2.0 * (v - k) - 1.0
        return self._rho_logscale[k] + np.log(_cheb.chebval(x, self._rho_coef[k]))


@lru_cache(maxsize=4)
def default_grid(t_max: int = 100) -> DickmanGrid:
    return DickmanGrid(t_max=t_max)


def rho(t: float, grid: DickmanGrid | None = None) -> float:
    return (grid or default_grid()).rho(t)


def rho2(t: float, grid: DickmanGrid | None = None) -> float:
    return (grid or default_grid()).rho2(t)


def rho_deriv(t: float, grid: DickmanGrid | None = None) -> float:
    return (grid or default_grid()).rho_deriv(t)


def rho2_deriv(t: float, grid: DickmanGrid | None = None) -> float:
    return (grid or default_grid()).rho2_deriv(t)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _gl_rule():
    nodes, weights = np.polynomial.legendre.leggauss(_GL_NODES)
    return nodes, weights


def gl_integrate(func, a: float, b: float) -> float:
    """Gauss-Legendre integral of a smooth scalar function, 64 nodes per unit."""
    if b <= a:
        return 0.0
    nodes, weights = _gl_rule()
    pieces = max(1, int(math.ceil(b - a)))
    edges = np.linspace(a, b, pieces + 1)
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        v = mid + half * nodes
        total += half * float(np.sum(weights * np.array([func(t) for t in v])))
    return total


def log_lambda_fn(s: float, t: float, grid: DickmanGrid | None = None) -> float:
    """log of lambda(s, t) = int_0^s rho(v) e^(v xi(t)) dv.

    The integrand is assembled as exp(v xi + log rho(v)) on Gauss-Legendre
    nodes per unit subinterval, combined with a max shift.
    """
    grid = grid or default_grid()
    s = float(s)
    if s < 0:
        raise DomainError(f"lambda integral needs s >= 0, got {s}")
    if s > grid.t_max:
        raise DomainError(f"s={s} beyond grid horizon {grid.t_max}")
    if s == 0:
        return -math.inf
    xi_t = xi(t).xi
    nodes, weights = _gl_rule()
    logs = []
    wts = []
    k = 0
    while k < s:
        right = min(k + 1.0, s)
        half = 0.5 * (right - k)
        mid = 0.5 * (right + k)
        v = mid + half * nodes
        logs.append(v * xi_t + grid._log_rho_nodes(v, k))
        wts.append(np.full(_GL_NODES, half) * weights)
        k += 1
    log_vals = np.concatenate(logs)
    w = np.concatenate(wts)
    shift = float(np.max(log_vals))
    return shift + math.log(float(np.sum(w * np.exp(log_vals - shift))))


def lambda_fn(s: float, t: float, grid: DickmanGrid | None = None) -> float:
    """lambda(s, t); nondecreasing in s and bounded by rho_hat(-xi(t))."""
    lv = log_lambda_fn(s, t, grid)
    return 0.0 if lv == -math.inf else math.exp(lv)


def kappa(u: float, w: float, grid: DickmanGrid | None = None) -> float:
    """Normalised truncated transform kappa(u, w) = lambda(w, u)/rho_hat(-xi(u)).

    Lies in [0, 1) and is nondecreasing in w; kappa(1, 1) = e^(-gamma).
    """
    lv = log_lambda_fn(w, u, grid)
    if lv == -math.inf:
        return 0.0
    return math.exp(lv - log_rho_hat_neg(xi(u).xi))


def nu(t: float, grid: DickmanGrid | None = None) -> float:
    """nu(t) = rho2(t) / (rho(t) lambda(t, t)); equals 1 at t = 1."""
    grid = grid or default_grid()
    t = float(t)
    if t < 1:
        raise DomainError(f"nu needs t >= 1, got {t}")
    return math.exp(grid.log_rho2(t) - grid.log_rho(t) - log_lambda_fn(t, t, grid))


# ---------------------------------------------------------------------------
# Saddle-point asymptotic reference forms
# ---------------------------------------------------------------------------


def xi_integral(a: float, b: float) -> float:
    """int_a^b xi(s) ds with xi extended by 0 below 1."""
    if b <= a:
        return 0.0
    if a < 1 <= b:
        return xi_integral(1.0, b)
    return gl_integrate(lambda s: _xi_ext(s), a, b)


def rho_saddle_form(t: float) -> float:
    """sqrt(xi'(t)/2 pi) exp(gamma - int_1^t xi); rho(t) up to 1 + O(1/t)."""
    if t < 1:
        raise DomainError(f"saddle form needs t >= 1, got {t}")
    return math.sqrt(xi(t).xi_prime / (2 * math.pi)) * math.exp(
        EULER_GAMMA - xi_integral(1.0, t)
    )


def rho2_saddle_form(t: float) -> float:
    """sqrt(xi'(t/2)/4 pi) exp(2 gamma - 2 int_1^(t/2) xi); rho2 up to 1 + O(1/t)."""
    if t < 2:
        raise DomainError(f"rho2 saddle form needs t >= 2, got {t}")
    return math.sqrt(xi(t / 2).xi_prime / (4 * math.pi)) * math.exp(
        2 * EULER_GAMMA - 2 * xi_integral(1.0, t / 2)
    )


def nu_saddle_form(t: float) -> float:
    """sqrt(2 xi'(t/2)/xi'(t)) exp(-int_(t/2)^t xi'(s)(2s - t) ds)."""
    if t < 1:
        raise DomainError(f"nu saddle form needs t >= 1, got {t}")
    integral = gl_integrate(lambda s: _xi_prime_ext(s) * (2 * s - t), t / 2, t)
    ratio = 2 * xi(t / 2).xi_prime / xi(t).xi_prime if t >= 2 else 2 * 2.0 / xi(t).xi_prime
    return math.sqrt(ratio) * math.exp(-integral)
