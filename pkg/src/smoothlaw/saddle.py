"""Saddle-point layer for the partial Euler product zeta(s, y).

zeta(s, y) = prod_{p <= y} (1 - p^(-s))^(-1) and its logarithmic
derivative phi_y(s) = sum_{p <= y} log(p) / (p^s - 1).  The saddle point
alpha(x, y) is the unique positive root of phi_y(alpha) = log(x); around
it the count of y-friable integers up to x has the Gaussian-shaped
approximation  x^alpha zeta(alpha, y) / (alpha sqrt(2 pi |phi_y'(alpha)|)).

x is carried as log(x) throughout, so a y = 2 run at x = 2^4096 scale
needs no big-integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverError
from .primes import sieve_primes

_MAX_EXP = 709.0  # exp() overflow threshold for float64


@dataclass(frozen=True)
class SaddlePoint:
    """Fitted saddle-point context at (x, y).

    sigma_j is the j-th derivative of sigma -> sigma*log(x) + log zeta(sigma, y)
    at alpha, up to sign: sigma2 = |phi_y'(alpha)| > 0, sigma3, sigma4 likewise
    positive.  theta = sqrt(sigma2)/log(y) is the standard deviation of log(n)
    under the law, in units of log(y).
    """

    log_x: float
    y: int
    u: float
    ubar: float
    alpha: float
    log_zeta: float
    sigma2: float
    sigma3: float
    sigma4: float
    theta: float

    @property
    def x(self) -> float:
        return math.exp(self.log_x) if self.log_x < _MAX_EXP else math.inf


@dataclass(frozen=True)
class PsiApprox:
    """Saddle-point approximation of Psi(x, y), kept in log form on overflow."""

    log_value: float
    value: float | None
    overflow: bool


def _prime_logs(y: int) -> np.ndarray:
    return sieve_primes(int(y)).logs


def log_zeta_y(s: float, y: int) -> float:
    """log zeta(s, y) = sum_{p <= y} -log(1 - p^(-s)); finite for all s > 0."""
    if s <= 0:
        raise DomainError(f"zeta(s, y) diverges for s <= 0, got s={s}")
    lp = _prime_logs(y)
    # 1 - p^(-s) = -expm1(-s log p), stable for small s log p.
    return float(np.sum(-np.log(-np.expm1(-s * lp))))


def phi_y_k(s: float, y: int, k: int = 0) -> float:
    """phi_y(s) for k = 0, or its k-th derivative for 1 <= k <= 4.

    All orders come from the absolutely convergent expansion
    phi_y^(k)(s) = sum_{p <= y} sum_{m >= 1} (-m log p)^k (log p) p^(-ms);
    the geometric m-sums are carried out in closed form, which is the exact
    limit of the truncated tail-summation (good to ~1 ulp per term).
    """
    if s <= 0:
        raise DomainError(f"phi_y is evaluated for s > 0 only, got s={s}")
    if not 0 <= k <= 4:
        raise DomainError(f"derivative order must be 0..4, got {k}")
    lp = _prime_logs(y)
    with np.errstate(over="ignore"):
        q = np.exp(-s * lp)
        omq = -np.expm1(-s * lp)  # 1 - q, stable
        if k == 0:
            terms = lp * q / omq
        elif k == 1:
            terms = -(lp**2) * q / omq**2
        elif k == 2:
            terms = lp**3 * q * (1 + q) / omq**3
        elif k == 3:
            terms = -(lp**4) * q * (1 + 4 * q + q**2) / omq**4
        else:
            terms = lp**5 * q * (1 + 11 * q + 11 * q**2 + q**3) / omq**5
    return float(np.sum(terms))


def solve_alpha(log_x: float, y: int) -> SaddlePoint:
    """Solve phi_y(alpha) = log(x) and fit the saddle-point context.

    Newton with the analytic derivative phi_y', seeded by inverting the
    standard first-order estimate alpha ~ log(1 + y/log x)/log y, with a
    maintained bracket and bisection fallback.  Residual tolerance is
    1e-12 * log(x); non-convergence raises instead of returning silently.
    """
    log_x = float(log_x)
    y = int(y)
    if log_x <= 0:
        raise DomainError(f"log x must be > 0, got {log_x}")
    if y < 2:
        raise DomainError(f"y must be >= 2, got {y}")
    lp = _prime_logs(y)
    log_y = math.log(y)

    def phi(s):
        with np.errstate(over="ignore"):
            return float(np.sum(lp / np.expm1(s * lp)))

    def dphi(s):
        with np.errstate(over="ignore"):
            em = -np.expm1(-s * lp)
            return -float(np.sum(lp**2 * np.exp(-s * lp) / em**2))

    s0 = math.log1p(y / log_x) / log_y
    lo = hi = s0
    if phi(s0) > log_x:
        while phi(hi) > log_x:
            hi *= 2
            if hi > 1e6:
                raise SolverError(f"no bracket above seed for (log x={log_x}, y={y})")
    else:
        while phi(lo) <= log_x:
            lo /= 2
            if lo < 1e-300:
                raise SolverError(f"no bracket below seed for (log x={log_x}, y={y})")

    tol = 1e-12 * log_x
    s = min(max(s0, lo), hi)
    converged = False
    for _ in range(200):
        f = phi(s) - log_x
        if abs(f) <= tol:
            converged = True
            break
        if f > 0:
            lo = s
        else:
            hi = s
        step = f / dphi(s)
        s_new = s - step
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        if s_new == s:
            converged = abs(f) <= 10 * tol
            break
        s = s_new
    if not converged:
        raise SolverError(
            f"saddle solver did not reach |phi(alpha) - log x| <= {tol:.3e} "
            f"at (log x={log_x}, y={y}); last residual {phi(s) - log_x:.3e}"
        )

    sigma2 = -phi_y_k(s, y, 1)
    sigma3 = phi_y_k(s, y, 2)
    sigma4 = -phi_y_k(s, y, 3)
    return SaddlePoint(
        log_x=log_x,
        y=y,
        u=log_x / log_y,
        ubar=min(y, log_x) / log_y,
        alpha=s,
        log_zeta=log_zeta_y(s, y),
        sigma2=sigma2,
        sigma3=sigma3,
        sigma4=sigma4,
        theta=math.sqrt(sigma2) / log_y,
    )


def solve_alpha_x(x: float, y: int) -> SaddlePoint:
    """Convenience wrapper taking x itself rather than log(x)."""
    if x <= 1:
        raise DomainError(f"x must be > 1, got {x}")
    return solve_alpha(math.log(x), y)


def psi_saddle(sp: SaddlePoint) -> PsiApprox:
    """Main saddle-point term x^alpha zeta(alpha,y) / (alpha sqrt(2 pi sigma2)).

    Assembled in log space; the linear value is only materialised when it
    does not overflow, otherwise the log form is returned with a flag.
    """
    log_value = (
        sp.alpha * sp.log_x
        + sp.log_zeta
        - math.log(sp.alpha)
        - 0.5 * math.log(2 * math.pi * sp.sigma2)
    )
    if log_value < _MAX_EXP:
        return PsiApprox(log_value=log_value, value=math.exp(log_value), overflow=False)
    return PsiApprox(log_value=log_value, value=None, overflow=True)


def theta_of(sp: SaddlePoint) -> float:
    """theta(x, y) = sqrt(|phi_y'(alpha)|) / log(y); comparable to u/sqrt(ubar)."""
    return math.sqrt(sp.sigma2) / math.log(sp.y)


def alpha_v_derivative(v: float, y: int) -> float:
    """d/dv of v -> alpha(y^v, y): equals -log(y)/sigma2 at x = y^v. Negative."""
    if v < 1:
        raise DomainError(f"v must be >= 1, got {v}")
    y = int(y)
    sp = solve_alpha(v * math.log(y), y)
    return -math.log(y) / sp.sigma2
