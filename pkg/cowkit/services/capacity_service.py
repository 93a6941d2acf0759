# cowkit/services/capacity_service.py
"""
User-count and sum-capacity bounds, in bits.

Everything combinatorial is evaluated in the log domain (gammaln + logsumexp);
binomial coefficients such as C(300, 150) overflow a float long before the
sweeps of interest end.

User-count bounds (largest n an errorless m-chip code can carry):
  thm6    n <= m * H(y), y the sum of n fair +1/-1 variables
  appxA   n <= m/2 * (H3 - H1) + H1 with H3 the best three-row joint entropy

Sum-capacity bounds C(m, n) = max_C log2 |C {+1,-1}^n|:
  lemma2_n / lemma2_log   C <= n and C <= m log2(n + 1)
  lemma3                  C >= m log2((n + m) / m) when m | n
  thm7_lower              C >= n - log2 A(m, n)
  thm8_upper              C <= m (log2(n)/2 + log2 lambda) + 1
"""
from __future__ import annotations

import csv
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import IO, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from cachetools import LRUCache, cached
from scipy.optimize import bisect
from scipy.special import entr, gammaln, logsumexp

from ..core.errors import CapacityError, LimitExceededError, PreconditionError
from ..core.descriptor import CodeDescriptor
from ..core.matrix import CodeMatrix
from ..core.schema import BoundReport
from ..deps import get_settings

log = logging.getLogger(__name__)

_LN2 = math.log(2.0)


# -----------------------------
# Binomial entropy
# -----------------------------

def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


@dataclass(frozen=True)
class EntropyTable:
    """ln p_i for p_i = C(n, i) / 2^n, i = 0..n."""

    n: int
    log_p: np.ndarray

    @classmethod
    def build(cls, n: int) -> "EntropyTable":
        if n < 0:
            raise PreconditionError("entropy table needs n >= 0")
        i = np.arange(n + 1, dtype=np.float64)
        log_p = _log_binom(n, i) - n * _LN2
        table = cls(n, log_p)
        table.check()
        return table

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_p)

    def check(self, tol: float = 1e-9) -> None:
        p = self.probabilities
        if abs(p.sum() - 1.0) > tol:
            raise CapacityError(f"binomial pmf for n={self.n} sums to {p.sum()!r}")
        if not np.allclose(p, p[::-1], rtol=0.0, atol=tol):
            raise CapacityError(f"binomial pmf for n={self.n} is not symmetric")

    def entropy_bits(self) -> float:
        p = self.probabilities
        return float(-(p * self.log_p).sum() / _LN2)


_entropy_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=4096), lock=_entropy_lock)
def binomial_entropy(n: int) -> float:
    """Entropy in bits of the sum of n independent fair +1/-1 variables."""
    if n < 1:
        raise PreconditionError("binomial entropy needs n >= 1")
    return EntropyTable.build(n).entropy_bits()


# -----------------------------
# User-count bounds
# -----------------------------

@dataclass(frozen=True)
class UserBound:
    n: int
    aux: Optional[str] = None
    fallback: bool = False


_MONOTONE_LOOKAHEAD = 8


def users_bound_thm6(m: int) -> int:
    """Largest n with n <= m * H(n); the scan starts at n = m."""
    if m < 1:
        raise PreconditionError("users bound needs m >= 1")
    n = m
    if n > m * binomial_entropy(n):
        raise CapacityError(f"thm6 scan infeasible at its start n={m}")
    while (n + 1) <= m * binomial_entropy(n + 1):
        n += 1

    # past the crossing the slack m*H(n) - n must keep falling
    prev = m * binomial_entropy(n + 1) - (n + 1)
    for k in range(n + 2, n + 2 + _MONOTONE_LOOKAHEAD):
        slack = m * binomial_entropy(k) - k
        if not (slack < prev < 0):
            raise CapacityError(f"thm6 slack is not decreasing past n={n} (m={m})")
        prev = slack
    return n


def _shifted_binomial(size: int) -> np.ndarray:
    return EntropyTable.build(size).probabilities


def joint_pmf3(n: int, a: int, b: int, c: int) -> np.ndarray:
    """
    Joint pmf of (y1, y2, z) for 0/1 rows grouped as a (1,1), b (1,0), c (0,1),
    d = n - a - b - c (0,0), with y0 = y1 + y2 + z. Indexed [y1, y2, z + a].
    """
    d = n - a - b - c
    if min(a, b, c, d) < 0:
        raise PreconditionError(f"row configuration ({a},{b},{c}) does not fit n={n}")
    p1 = _shifted_binomial(a)
    pb, pc, pd = _shifted_binomial(b), _shifted_binomial(c), _shifted_binomial(d)
    joint = np.zeros((a + b + 1, a + c + 1, a + d + 1), dtype=np.float64)
    block = np.multiply.outer(np.multiply.outer(pb, pc), pd)
    for s1 in range(a + 1):
        # y1 = s1 + s2, y2 = s1 + s3, z = s4 - s1
        joint[s1 : s1 + b + 1, s1 : s1 + c + 1, a - s1 : a - s1 + d + 1] += p1[s1] * block
    return joint


def _canonical(n: int, a: int, b: int, c: int) -> Tuple[int, int, int]:
    """Representative under the order-8 group: swapping rows 1 and 2, complementing either row."""
    d = n - a - b - c
    images = []
    for q in ((a, b, c, d), (a, c, b, d)):  # swap rows
        qa, qb, qc, qd = q
        for r in ((qa, qb, qc, qd), (qc, qd, qa, qb), (qb, qa, qd, qc), (qd, qc, qb, qa)):
            images.append(r[:3])
    return min(images)


_h3_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=1 << 16), key=lambda n, a, b, c: (n, *_canonical(n, a, b, c)), lock=_h3_lock)
def joint_entropy3(n: int, a: int, b: int, c: int) -> float:
    """H(y0, y1, y2) in bits; the pmf is checked for normalisation on every call."""
    joint = joint_pmf3(n, a, b, c)
    total = float(joint.sum())
    tol = get_settings().capacity.pmf_tolerance
    if abs(total - 1.0) > tol:
        raise CapacityError(f"three-row pmf sums to {total!r} for n={n} ({a},{b},{c})")
    return float(entr(joint).sum() / _LN2)


def _balanced(n: int) -> Tuple[int, int, int]:
    q, r = divmod(n, 4)
    sizes = [q + 1] * r + [q] * (4 - r)
    return sizes[0], sizes[1], sizes[2]


def _configs(n: int, step: int) -> Iterable[Tuple[int, int, int]]:
    seen = set()
    for a in range(0, n + 1, step):
        for b in range(0, n - a + 1, step):
            for c in range(0, n - a - b + 1, step):
                key = _canonical(n, a, b, c)
                if key not in seen:
                    seen.add(key)
                    yield key


def _refine(n: int, start: Tuple[int, int, int], best: float, step: int) -> Tuple[Tuple[int, int, int], float]:
    point = start
    while step >= 1:
        improved = True
        while improved:
            improved = False
            a, b, c = point
            for da, db, dc in (
                (step, 0, 0), (-step, 0, 0), (0, step, 0), (0, -step, 0), (0, 0, step), (0, 0, -step),
                (step, -step, 0), (-step, step, 0), (0, step, -step), (0, -step, step),
                (step, 0, -step), (-step, 0, step),
            ):
                cand = (a + da, b + db, c + dc)
                if min(cand) < 0 or sum(cand) > n:
                    continue
                h = joint_entropy3(n, *cand)
                if h > best:
                    best, point, improved = h, cand, True
        step //= 2
    return point, best


def max_joint_entropy3(n: int) -> Tuple[float, Tuple[int, int, int]]:
    """H3: the best H(y0, y1, y2) over row configurations, with its argmax."""
    cfg = get_settings().capacity
    if n <= cfg.exhaustive_max_n:
        best, arg = -1.0, (0, 0, 0)
        for conf in _configs(n, 1):
            h = joint_entropy3(n, *conf)
            if h > best:
                best, arg = h, conf
        return best, arg

    step = math.ceil(n / cfg.coarse_divisions)
    best, arg = -1.0, (0, 0, 0)
    for conf in _configs(n, step):
        h = joint_entropy3(n, *conf)
        if h > best:
            best, arg = h, conf
    bal = _balanced(n)
    h_bal = joint_entropy3(n, *bal)
    if h_bal > best:
        best, arg = h_bal, bal
    arg, best = _refine(n, arg, best, step)
    return best, arg


# absorbs rounding where the bound is met with equality, e.g. m = n = 2
_APPX_SLACK = 1e-9


def _appx_rhs(m: int, n: int, h3: float) -> float:
    h1 = binomial_entropy(n)
    return m / 2 * (h3 - h1) + h1


def users_bound_appxA(m: int) -> UserBound:
    """
    Largest n with n <= m/2 (H3 - H1) + H1. Each n is tried at the balanced
    configuration first; the full H3 search runs only where that fails.
    Odd m falls back to the thm6 scan and says so.
    """
    if m < 1:
        raise PreconditionError("users bound needs m >= 1")
    if m % 2:
        log.warning("appxA needs even m; m=%d falls back to thm6", m)
        return UserBound(users_bound_thm6(m), "fallback thm6", True)

    def feasible(n: int) -> Tuple[bool, Tuple[int, int, int]]:
        bal = _balanced(n)
        if n <= _appx_rhs(m, n, joint_entropy3(n, *bal)) + _APPX_SLACK:
            return True, bal
        h3, arg = max_joint_entropy3(n)
        return n <= _appx_rhs(m, n, h3) + _APPX_SLACK, arg

    n = m
    ok, arg = feasible(n)
    if not ok:
        raise CapacityError(f"appxA scan infeasible at its start n={m}")
    while True:
        ok, nxt = feasible(n + 1)
        if not ok:
            break
        n, arg = n + 1, nxt
        if n % 32 == 0:
            log.debug("appxA m=%d: n=%d still feasible", m, n)
    aux = "a={},b={},c={}".format(*arg)
    log.info("appxA m=%d -> %d (%s)", m, n, aux)
    return UserBound(n, aux)


# -----------------------------
# Capacity bounds
# -----------------------------

def capacity_upper_lemma2(m: int, n: int) -> float:
    _check_mn(m, n)
    return min(float(n), m * math.log2(n + 1))


def capacity_lower_lemma3(m: int, n: int) -> float:
    _check_mn(m, n)
    if n % m:
        raise PreconditionError(f"lemma3 needs m | n, got m={m}, n={n}")
    return m * math.log2((n + m) / m)


def log_collision_sum(m: int, n: int) -> float:
    """ln A(m, n), A = sum_j C(n, 2j) (C(2j, j) / 4^j)^m."""
    _check_mn(m, n)
    j = np.arange(n // 2 + 1, dtype=np.float64)
    terms = _log_binom(n, 2 * j) + m * (_log_binom(2 * j, j) - 2 * j * _LN2)
    return float(logsumexp(terms))


def log2_collision_sum(m: int, n: int) -> float:
    return log_collision_sum(m, n) / _LN2


def collision_sum_exact(m: int, n: int) -> Fraction:
    """A(m, n) as an exact rational, for cross-checks at small n."""
    _check_mn(m, n)
    return sum(
        (Fraction(comb(n, 2 * j)) * Fraction(comb(2 * j, j), 4**j) ** m for j in range(n // 2 + 1)),
        Fraction(0),
    )


def capacity_lower_thm7(m: int, n: int) -> float:
    return n - log2_collision_sum(m, n)


def _thm8_residual(m: int, n: int) -> Callable[[float], float]:
    ln_m = math.log(m)
    half_ln_n = 0.5 * math.log(n)
    rhs_const = (n + 1) * _LN2

    def f(lam: float) -> float:
        return m * (math.log(lam) + half_ln_n) - ln_m + lam * lam / 2 - rhs_const

    return f


def thm8_lambda(m: int, n: int) -> float:
    """Unique positive root of m ln(lambda sqrt n) = ln m - lambda^2 / 2 + (n + 1) ln 2."""
    _check_mn(m, n)
    f = _thm8_residual(m, n)
    lo = 1e-6
    hi = math.sqrt(2 * ((n + 1) * _LN2 + math.log(m))) + 1
    if not f(lo) < 0 < f(hi):
        raise CapacityError(f"thm8 root not bracketed for m={m}, n={n}")
    lam = float(bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400))
    scale = m * abs(math.log(lam) + 0.5 * math.log(n)) + math.log(m) + lam * lam / 2 + (n + 1) * _LN2
    if abs(f(lam)) > get_settings().capacity.bisection_rtol * scale:
        raise CapacityError(f"thm8 residual {f(lam)!r} too large for m={m}, n={n}")
    return lam


def capacity_upper_thm8(m: int, n: int) -> Tuple[float, float]:
    lam = thm8_lambda(m, n)
    return m * (0.5 * math.log2(n) + math.log2(lam)) + 1, lam


def image_size(code: CodeMatrix | CodeDescriptor, max_columns: int = 20) -> int:
    """|C {+1,-1}^n| by enumeration."""
    matrix = code.matrix if isinstance(code, CodeDescriptor) else code
    n = matrix.cols
    if n > max_columns:
        raise LimitExceededError("image enumeration columns", n, max_columns)
    idx = np.arange(1 << n, dtype=np.int64)[:, None]
    x = (1 - 2 * ((idx >> np.arange(n - 1, -1, -1)) & 1)).astype(np.int16)
    y = x @ matrix.array.T.astype(np.int16)
    return int(np.unique(y, axis=0).shape[0])


def _check_mn(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise PreconditionError(f"bounds need m, n >= 1, got m={m}, n={n}")


# -----------------------------
# Sweeps
# -----------------------------

USER_BOUNDS = ("thm6", "appxA")
CAPACITY_BOUNDS = ("lemma2_n", "lemma2_log", "lemma3", "thm7_lower", "thm8_upper")
ALL_BOUNDS = USER_BOUNDS + CAPACITY_BOUNDS

_BOUND_ALIASES = {"thm7": "thm7_lower", "thm8": "thm8_upper", "lemma2": "lemma2_log"}


def canonical_bound(name: str) -> str:
    name = _BOUND_ALIASES.get(name, name)
    if name not in ALL_BOUNDS:
        raise PreconditionError(f"unknown bound {name!r} (known: {', '.join(ALL_BOUNDS)})")
    return name


def _fmt(x: float, digits: int) -> str:
    return f"{x:.{digits}g}"


def bound_report(m: int, n: int, bound: str) -> Optional[BoundReport]:
    """One grid point; None where the bound's hypothesis fails (lemma3 with m not dividing n)."""
    bound = canonical_bound(bound)
    if bound == "thm6":
        val = users_bound_thm6(m)
        return BoundReport(m=m, n=val, bound="thm6", value_bits=float(val))
    if bound == "appxA":
        res = users_bound_appxA(m)
        return BoundReport(m=m, n=res.n, bound="appxA", value_bits=float(res.n), aux=res.aux)
    if bound == "lemma2_n":
        _check_mn(m, n)
        return BoundReport(m=m, n=n, bound=bound, value_bits=float(n))
    if bound == "lemma2_log":
        _check_mn(m, n)
        return BoundReport(m=m, n=n, bound=bound, value_bits=m * math.log2(n + 1))
    if bound == "lemma3":
        if n % m:
            return None
        return BoundReport(m=m, n=n, bound=bound, value_bits=capacity_lower_lemma3(m, n))
    if bound == "thm7_lower":
        return BoundReport(m=m, n=n, bound=bound, value_bits=capacity_lower_thm7(m, n))
    bits, lam = capacity_upper_thm8(m, n)
    return BoundReport(m=m, n=n, bound="thm8_upper", value_bits=bits, aux=f"lambda={_fmt(lam, 12)}")


def sweep(
    m_values: Sequence[int],
    n_values: Sequence[int],
    bounds: Sequence[str],
    *,
    threads: Optional[int] = None,
) -> List[BoundReport]:
    """One report per (m, n, bound) in grid order; user-count bounds once per m."""
    if not m_values or not bounds:
        raise PreconditionError("sweep needs a nonempty m range and bound set")
    names = [canonical_bound(b) for b in bounds]
    if any(b in CAPACITY_BOUNDS for b in names) and not n_values:
        raise PreconditionError("capacity bounds need a nonempty n range")

    tasks: List[Tuple[int, int, str]] = []
    for m in m_values:
        for b in names:
            if b in USER_BOUNDS:
                tasks.append((m, 1, b))
        for n in n_values:
            for b in names:
                if b in CAPACITY_BOUNDS:
                    tasks.append((m, n, b))

    workers = threads or get_settings().worker_count()
    log.info("sweep: %d points over %d workers", len(tasks), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda t: bound_report(*t), tasks))
    return [r for r in results if r is not None]


@dataclass(frozen=True)
class FigurePanel:
    m_values: Tuple[int, ...]
    n_values: Tuple[int, ...]
    bounds: Tuple[str, ...]


_FIGURES: Dict[str, Tuple[FigurePanel, ...]] = {
    # user-count bounds against the spreading factor
    "1": (FigurePanel(tuple(range(4, 65, 4)), (), ("thm6", "appxA")),),
    # capacity bounds against n at m = 64, and against m at n = 220
    "2a": (FigurePanel((64,), tuple(range(2, 301)), ("lemma2_n", "lemma2_log", "thm7_lower", "thm8_upper")),),
    "2b": (FigurePanel(tuple(range(2, 129)), (220,), ("lemma2_n", "lemma2_log", "thm7_lower", "thm8_upper")),),
    # lower-bound families
    "3a": tuple(FigurePanel((m,), tuple(range(2, 301)), ("thm7_lower",)) for m in (8, 16, 32, 64)),
    "3b": tuple(FigurePanel(tuple(range(2, 129)), (n,), ("thm7_lower",)) for n in (64, 128, 220, 300)),
}

FIGURE_NAMES = tuple(_FIGURES)


def figure_sweep(name: str) -> Tuple[FigurePanel, ...]:
    try:
        return _FIGURES[name]
    except KeyError:
        raise PreconditionError(f"unknown figure {name!r} (known: {', '.join(FIGURE_NAMES)})") from None


def run_figure(name: str, *, threads: Optional[int] = None) -> List[BoundReport]:
    out: List[BoundReport] = []
    for panel in figure_sweep(name):
        out.extend(sweep(panel.m_values, panel.n_values, panel.bounds, threads=threads))
    return out


CSV_COLUMNS = ("m", "n", "bound", "value_bits", "aux")


def write_bounds_csv(reports: Iterable[BoundReport], fh: IO[str], digits: Optional[int] = None) -> None:
    digits = digits or get_settings().capacity.sweep_digits
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([r.m, r.n, r.bound, _fmt(r.value_bits, digits), r.aux or ""])


__all__ = [
    "EntropyTable",
    "binomial_entropy",
    "UserBound",
    "users_bound_thm6",
    "joint_pmf3",
    "joint_entropy3",
    "max_joint_entropy3",
    "users_bound_appxA",
    "capacity_upper_lemma2",
    "capacity_lower_lemma3",
    "log_collision_sum",
    "log2_collision_sum",
    "collision_sum_exact",
    "capacity_lower_thm7",
    "thm8_lambda",
    "capacity_upper_thm8",
    "image_size",
    "USER_BOUNDS",
    "CAPACITY_BOUNDS",
    "ALL_BOUNDS",
    "canonical_bound",
    "bound_report",
    "sweep",
    "FigurePanel",
    "FIGURE_NAMES",
    "figure_sweep",
    "run_figure",
    "CSV_COLUMNS",
    "write_bounds_csv",
]
