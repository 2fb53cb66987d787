"""Exact arithmetic over friable integers.

Everything in this module is brute-force verifiable: prime sieving, exact
counts Psi(x, y) of y-friable integers up to x, the divisor-weighted count
Psi_tau, and the truncated Dirichlet sum D(x, y, z) = sum n^(-alpha) over
y-friable n <= z.  These are the oracles the asymptotic layers are tested
against, so no floating shortcut is allowed to decide membership of an
integer in S(z, y): set membership is always exact integer arithmetic.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BudgetError, DomainError

DEFAULT_TERM_BUDGET = 100_000_000
SIEVE_CAP = 100_000_000

# Strategy cutoffs for d_exact / psi_exact (memory-bound, not user budgets).
_SIEVE_ROUTE_CAP = 30_000_000     # max x for the cumulative-count sieve
_SINGLE_ARRAY_CAP = 12_000_000    # max friable values materialised in one array
_SPLIT_ARRAY_CAP = 25_000_000     # per-side cap for the split enumeration
_SPLIT_LADDER = (7, 13, 19, 31, 53, 97, 173, 311, 563)


@dataclass(frozen=True)
class PrimeTable:
    """Primes up to `bound` with their natural logarithms.

    `primes` is strictly ascending; `logs[i] == log(primes[i])`.
    """

    bound: int
    primes: np.ndarray
    logs: np.ndarray

    def __len__(self):
        return len(self.primes)

    @property
    def p_max(self) -> int:
        """Largest prime <= bound."""
        return int(self.primes[-1])


@lru_cache(maxsize=32)
def _sieve_cached(y: int) -> PrimeTable:
    mask = np.ones(y + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(y) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    primes = np.nonzero(mask)[0].astype(np.int64)
    logs = np.log(primes.astype(np.float64))
    primes.setflags(write=False)
    logs.setflags(write=False)
    return PrimeTable(bound=y, primes=primes, logs=logs)


def sieve_primes(y: int, cap: int = SIEVE_CAP) -> PrimeTable:
    """Sieve of Eratosthenes: all primes in [2, y]."""
    y = int(y)
    if y < 2:
        raise DomainError(f"prime bound must be >= 2, got {y}")
    if y > cap:
        raise BudgetError(f"prime bound {y} exceeds sieve cap {cap}", budget=cap)
    return _sieve_cached(y)


def is_friable(n: int, y: int) -> bool:
    """True if every prime factor of n is <= y (P+(1) = 1 by convention)."""
    n = int(n)
    if n < 1:
        raise DomainError(f"need a positive integer, got {n}")
    if n == 1:
        return True
    for p in sieve_primes(y).primes:
        p = int(p)
        if p * p > n:
            break
        while n % p == 0:
            n //= p
        if n == 1:
            return True
    return n == 1 or n <= y


class FriableEnumeration:
    """Single-consumer stream of S(x, y) as (n, exponent map) pairs.

    Deterministic depth-first order: primes descending, exponent ascending,
    so n = 1 is always the first item.  `emitted` tracks progress for the
    budget diagnostic.
    """

    def __init__(self, x_limit: int, y_limit: int, budget: int | None = None):
        self.x_limit = int(x_limit)
        self.y_limit = int(y_limit)
        self.budget = DEFAULT_TERM_BUDGET if budget is None else int(budget)
        self.emitted = 0
        if self.x_limit < 1:
            raise DomainError(f"x limit must be >= 1, got {x_limit}")
        self._table = sieve_primes(y_limit)

    def __iter__(self):
        x = self.x_limit
        asc = [int(p) for p in self._table.primes]
        # Frame (t, n, exps): all completions of n using primes asc[0..t].
        stack = [(len(asc) - 1, 1, ())]
        while stack:
            t, n, exps = stack.pop()
            cap = x // n
            while t >= 0 and asc[t] > cap:
                t = bisect_right(asc, cap, 0, t) - 1
            if t < 0:
                self.emitted += 1
                if self.emitted > self.budget:
                    raise BudgetError(
                        f"friable enumeration of S({x}, {self.y_limit}) exceeded "
                        f"budget after {self.emitted - 1} terms",
                        terms_done=self.emitted - 1,
                        budget=self.budget,
                    )
                yield n, dict(exps)
                continue
            p = asc[t]
            children = []
            m, e = n, 0
            while m <= x:
                children.append((t - 1, m, exps + ((p, e),) if e else exps))
                m *= p
                e += 1
            stack.extend(reversed(children))


def enumerate_friable(x: int, y: int, budget: int | None = None) -> FriableEnumeration:
    """Stream every n in S(x, y) exactly once with its exponent vector."""
    return FriableEnumeration(x, y, budget)


# ---------------------------------------------------------------------------
# Exact Psi(x, y)
# ---------------------------------------------------------------------------


class _PsiCounter:
    """Memoised exact counter of Psi(m, y) for one fixed y.

    Two routes: a cumulative-count sieve (fast when y^2 >= x) and the
    recurrence Psi(x, p_k) = Psi(x, p_(k-1)) + Psi(x/p_k, p_k), unrolled as
    Psi(x, p_k) = sum_j Psi(x // p_k^j, p_(k-1)) and memoised on the pair
    (floor(x), usable prime count).
    """

    def __init__(self, y: int):
        self.y = int(y)
        self.table = sieve_primes(y)
        self.asc = [int(p) for p in self.table.primes]
        self.memo: dict[tuple[int, int], int] = {}
        self.cum: np.ndarray | None = None

    def _build_cumulative(self, x: int) -> None:
        # Divide out primes <= min(y, sqrt(x)); the residue of a friable n
        # is then 1 or a single prime factor <= y.
        res = np.arange(x + 1, dtype=np.int64)
        bound = min(self.y, math.isqrt(x))
        for p in self.asc:
            if p > bound:
                break
            q = p
            while q <= x:
                res[q::q] //= p
                q *= p
        friable = (res == 1) | (res <= self.y)
        friable[0] = False
        self.cum = np.cumsum(friable, dtype=np.int64)

    def count(self, x: int, budget: int) -> int:
        x = int(x)
        if x < 1:
            return 0
        if self.y >= x:
            return x
        if self.cum is not None and x < len(self.cum):
            return int(self.cum[x])
        if self.y * self.y >= x and x <= _SIEVE_ROUTE_CAP:
            self._build_cumulative(x)
            return int(self.cum[x])
        return self._count_recurrence(x, budget)

    def _canon(self, xi: int, k: int) -> tuple[int, int]:
        if xi >= 2 and self.asc[k - 1] > xi:
            k = bisect_right(self.asc, xi, 0, k)
        return xi, k

    def _count_recurrence(self, x: int, budget: int) -> int:
        memo, asc = self.memo, self.asc
        root = self._canon(x, len(asc))
        if root[0] < 2 or root[1] == 0:
            return 1
        stack = [root]
        while stack:
            key = stack[-1]
            if key in memo:
                stack.pop()
                continue
            xi, k = key
            p = asc[k - 1]
            total = 0
            missing = []
            q = 1
            while q <= xi:
                cx = xi // q
                if cx < 2 or k == 1:
                    total += 1
                else:
                    child = self._canon(cx, k - 1)
                    if child[1] == 0:
                        total += 1
                    else:
                        v = memo.get(child)
                        if v is None:
                            missing.append(child)
                        else:
                            total += v
                q *= p
            if missing:
                stack.extend(missing)
            else:
                memo[key] = total
                stack.pop()
                if len(memo) > budget:
                    raise BudgetError(
                        f"Psi({x}, {self.y}) recurrence exceeded budget "
                        f"({len(memo)} memo states)",
                        terms_done=len(memo),
                        budget=budget,
                    )
        return memo[root]


_counters: dict[int, _PsiCounter] = {}


def _counter(y: int) -> _PsiCounter:
    y = int(y)
    counter = _counters.get(y)
    if counter is None:
        if len(_counters) >= 8:
            _counters.pop(next(iter(_counters)))
        counter = _counters[y] = _PsiCounter(y)
    return counter


def psi_exact(x: int, y: int, budget: int | None = None) -> int:
    """|S(x, y)|: the number of y-friable integers in [1, x]. Exact."""
    x = int(math.floor(x))
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    y = int(y)
    if y < 2:
        raise DomainError(f"y must be >= 2, got {y}")
    if y >= x:
        return x
    budget = DEFAULT_TERM_BUDGET if budget is None else int(budget)
    return _counter(y).count(x, budget)


def psi_table_columns(x_max: int, y: int):
    """Yield (p, counts) for each prime p <= y, counts[m] = Psi(m, p).

    Vectorised recurrence over the prime ladder; one int64 column of length
    x_max + 1 per prime.  Intended for bulk verification sweeps.
    """
    x_max = int(x_max)
    if x_max < 1:
        raise DomainError(f"x_max must be >= 1, got {x_max}")
    col = np.ones(x_max + 1, dtype=np.int64)
    col[0] = 0
    for p in sieve_primes(y).primes:
        p = int(p)
        if p > x_max:
            # Psi(m, q) = Psi(m, p_max(m)) for every larger prime q.
            yield p, col
            continue
        new = col.copy()
        q = p
        while q <= x_max:
            new[q:] += col[np.arange(q, x_max + 1, dtype=np.int64) // q]
            q *= p
        col = new
        yield p, col


def psi_tau_exact(x: int, y: int, budget: int | None = None) -> int:
    """Sum of the divisor function tau(n) over S(x, y).

    Computed twice (direct tau sum over the enumeration, and the Dirichlet
    form sum_d Psi(x/d, y) over friable d); the two must agree exactly.
    """
    x = int(math.floor(x))
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    y = int(y)
    budget = DEFAULT_TERM_BUDGET if budget is None else int(budget)
    direct = 0
    for _, exps in enumerate_friable(x, y, budget):
        tau = 1
        for e in exps.values():
            tau *= e + 1
        direct += tau
    counter = _counter(y)
    dirichlet = 0
    for d, _ in enumerate_friable(x, y, budget):
        dirichlet += counter.count(x // d, budget) if y < x // d else x // d
    if direct != dirichlet:
        raise AssertionError(
            f"tau-sum mismatch at ({x}, {y}): direct {direct} != hyperbola {dirichlet}"
        )
    return direct


# ---------------------------------------------------------------------------
# Exact D(x, y, z) = sum over S(z, y) of n^(-alpha)
# ---------------------------------------------------------------------------


def d_exact_pow2(log_z: float, alpha: float, z_int: int | None = None) -> float:
    """Closed geometric form of D for y = 2: sum over powers 2^k <= z.

    Accepts z in the log domain so astronomically large z cost nothing.
    """
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if z_int is not None:
        if z_int < 1:
            return 0.0
        k_max = int(z_int).bit_length() - 1
    else:
        if log_z < 0:
            return 0.0
        k_max = int(math.floor(log_z / math.log(2) + 1e-9))
    a = alpha * math.log(2)
    # (1 - r^(K+1)) / (1 - r) with r = 2^(-alpha), both via expm1.
    return math.expm1(-a * (k_max + 1)) / math.expm1(-a)


def _friable_values(primes: np.ndarray, z: int, cap: int) -> np.ndarray:
    """All integers <= z whose prime factors all lie in `primes` (int64, unsorted)."""
    arr = np.ones(1, dtype=np.int64)
    for p in primes[::-1]:
        p = int(p)
        if p > z:
            continue
        parts = [arr]
        cur = arr
        lim = z // p
        while cur.size:
            cur = cur[cur <= lim] * p
            if cur.size:
                parts.append(cur)
        arr = np.concatenate(parts)
        if arr.size > cap:
            raise BudgetError(
                f"friable value table exceeded cap ({arr.size} > {cap})",
                terms_done=int(arr.size),
                budget=cap,
            )
    return arr


def _restricted_saddle_estimate(primes: np.ndarray, logs: np.ndarray, log_z: float) -> float:
    """Rough saddle-point estimate of #{n <= z : n friable over `primes`}.

    Only used to pick evaluation strategies; a factor of a few is fine.
    """
    if len(primes) == 0:
        return 1.0

    def phi(s):
        with np.errstate(over="ignore"):
            return float(np.sum(logs / np.expm1(s * logs)))

    lo, hi = 1e-9, 2.0
    while phi(hi) > log_z:
        hi *= 2
        if hi > 128:
            return 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if phi(mid) > log_z:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    with np.errstate(over="ignore"):
        em = -np.expm1(-s * logs)
        log_zeta = float(np.sum(-np.log(em)))
        sigma2 = float(np.sum(logs**2 * np.exp(-s * logs) / em**2))
    log_est = s * log_z + log_zeta - math.log(s) - 0.5 * math.log(2 * math.pi * max(sigma2, 1e-300))
    return math.exp(min(log_est, 700.0))


def _d_single(primes, z, alpha, cap):
    vals = _friable_values(primes, z, cap)
    total = np.sum(np.exp(-alpha * np.log(vals.astype(np.float64))), dtype=np.longdouble)
    return float(total), int(vals.size)


def _d_split(table: PrimeTable, z: int, alpha: float, budget: int):
    """Meet-in-the-middle D: small-prime friables times sorted medium-prime friables."""
    primes = table.primes
    log_z = math.log(z)
    best = None
    for p_split in _SPLIT_LADDER:
        if p_split >= table.p_max:
            break
        k = int(np.searchsorted(primes, p_split, side="right"))
        est_a = _restricted_saddle_estimate(primes[:k], table.logs[:k], log_z)
        est_b = _restricted_saddle_estimate(primes[k:], table.logs[k:], log_z)
        if max(est_a, est_b) > _SPLIT_ARRAY_CAP:
            continue
        if best is None or est_a + est_b < best[0]:
            best = (est_a + est_b, k)
    if best is None or best[0] > budget:
        raise BudgetError(
            f"D(., {table.bound}, {z}) is over budget on every split "
            f"(best estimate {0 if best is None else best[0]:.3g} terms)",
            budget=budget,
        )
    k = best[1]
    cap = min(budget, _SPLIT_ARRAY_CAP)
    small = _friable_values(primes[:k], z, cap)
    medium = np.sort(_friable_values(primes[k:], z, cap))
    if small.size + medium.size > budget:
        raise BudgetError(
            f"split enumeration used {small.size + medium.size} terms, budget {budget}",
            terms_done=int(small.size + medium.size),
            budget=budget,
        )
    weights = np.exp(-alpha * np.log(medium.astype(np.float64)))
    prefix = np.concatenate([[0.0], np.cumsum(weights, dtype=np.longdouble)])
    idx = np.searchsorted(medium, z // small, side="right")
    contrib = np.exp(-alpha * np.log(small.astype(np.float64))) * prefix[idx].astype(np.float64)
    total = float(np.sum(contrib, dtype=np.longdouble))
    count = int(np.sum(idx, dtype=np.int64))
    return total, count


def d_exact(x, y: int, z, alpha: float, budget: int | None = None,
            allow_zero_alpha: bool = False) -> float:
    """D(x, y, z): sum of n^(-alpha) over y-friable n <= z, exact membership.

    `x` only labels the saddle the exponent came from; the sum depends on
    (y, z, alpha).  alpha = 0 is admitted only through `allow_zero_alpha`
    (the sum then counts S(z, y), a testing hook).
    """
    if alpha <= 0 and not (allow_zero_alpha and alpha == 0):
        raise DomainError(f"alpha must be > 0, got {alpha}")
    y = int(y)
    if y < 2:
        raise DomainError(f"y must be >= 2, got {y}")
    budget = DEFAULT_TERM_BUDGET if budget is None else int(budget)
    if y == 2 and alpha > 0:
        zi = int(math.floor(z))
        return d_exact_pow2(0.0, alpha, z_int=zi)
    z = int(math.floor(z))
    if z < 1:
        return 0.0
    if alpha == 0:
        return float(psi_exact(z, y, budget))
    if y >= z:
        # S(z, y) = {1, ..., z}; chunked plain power sum.
        total = 0.0
        parts = []
        for start in range(1, z + 1, 1 << 22):
            block = np.arange(start, min(start + (1 << 22), z + 1), dtype=np.float64)
            parts.append(float(np.sum(np.exp(-alpha * np.log(block)), dtype=np.longdouble)))
        total = math.fsum(parts)
        return total
    table = sieve_primes(y)
    est = _restricted_saddle_estimate(table.primes, table.logs, math.log(z))
    if est <= _SINGLE_ARRAY_CAP / 3:
        try:
            total, _ = _d_single(table.primes, z, alpha, min(budget, _SINGLE_ARRAY_CAP))
            return total
        except BudgetError:
            pass
    total, _ = _d_split(table, z, alpha, budget)
    return total


def psi_via_dirichlet_split(x: int, y: int, budget: int | None = None) -> int:
    """Psi(x, y) by the split enumeration (independent of the recurrence)."""
    x = int(math.floor(x))
    y = int(y)
    budget = DEFAULT_TERM_BUDGET if budget is None else int(budget)
    table = sieve_primes(y)
    if y >= x:
        return x
    _, count = _d_split(table, x, 1.0, budget)
    return count
