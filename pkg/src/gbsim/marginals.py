"""Marginal probabilities q_n(x_1..x_k) of the position-basis distribution.

The fast route splits |Haf(W_x)|^2 into hafnians of prefix submatrices and
permanents of 0/1 "same mode" matrices, summed with a closed-form counting
factor. The brute-force route sums |Haf(W_x)|^2 over every completion and
is the oracle for the fast one.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import _kernels as K
from .linalg import hafnian, permanent, submatrix_wx

MODES = ("poly-space", "exp-space", "collision-free")
NEG_CLAMP = 1e-12
BRUTE_FORCE_LIMIT = 10**7
MAX_PREFIX = 62


class GuardExceeded(RuntimeError):
    """A brute-force routine was asked for more work than its guard allows."""


class InconsistentResult(ArithmeticError):
    """A probability came out clearly negative."""


def _log_binom(a: float, b: float) -> float:
    """log C(a, b) via the gamma function; -inf when C(a, b) = 0 for integer a - b < 0."""
    d = a - b
    if d < 0 and abs(d - round(d)) < 1e-9:
        return -math.inf
    return float(gammaln(a + 1) - gammaln(b + 1) - gammaln(d + 1))


# --------------------------------------------------------------------------
# Normalisation and counting factor
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationConstant:
    n: int
    m: int
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def normalization_f(n: int, m: int) -> NormalizationConstant:
    """f_n = n! C((m+n)/2 - 1, n/2), the sum of |Haf(W_x)|^2 over all x in [m]^n."""
    if n < 0 or n % 2:
        raise ValueError("n must be a non-negative even integer")
    if m < 1:
        raise ValueError("m must be positive")
    log_value = float(gammaln(n + 1)) + _log_binom((m + n) / 2 - 1, n / 2)
    return NormalizationConstant(n=n, m=m, log_value=log_value)


def normalization_f_recurrence(n: int, m: int) -> float:
    """f_n = (n-1)(m+n-2) f_{n-2}, f_0 = 1."""
    if n < 0 or n % 2:
        raise ValueError("n must be a non-negative even integer")
    f = 1.0
    for p in range(2, n + 1, 2):
        f *= (p - 1) * (m + p - 2)
    return f


@dataclass(frozen=True)
class FFactorParams:
    k: int
    mu: int
    j1: int
    j2: int
    n: int
    m: int

    def __post_init__(self):
        k, n = self.k, self.n
        if n < 0 or n % 2 or not 0 <= k <= n:
            raise ValueError(f"invalid (n, k) = ({n}, {k})")
        lo = max(0, k - n // 2)
        for j in (self.j1, self.j2):
            if not lo <= j <= k // 2:
                raise ValueError(f"j = {j} outside [{lo}, {k // 2}]")
        if (self.mu - k) % 2 or not self.mu_min <= self.mu <= self.mu_max:
            raise ValueError(f"mu = {self.mu} outside its admissible range")

    @property
    def mu_min(self) -> int:
        return max(0, 3 * self.k - 2 * (self.j1 + self.j2) - self.n)

    @property
    def mu_max(self) -> int:
        return self.k - 2 * max(self.j1, self.j2)


def log_f_factor(p: FFactorParams) -> float:
    """log of (n-k)! C((n-k+mu+m)/2 - 1, k - j1 - j2 + m/2 - 1)."""
    top = (p.n - p.k + p.mu + p.m) / 2 - 1
    bottom = p.k - p.j1 - p.j2 + p.m / 2 - 1
    return float(gammaln(p.n - p.k + 1)) + _log_binom(top, bottom)


def f_factor(p: FFactorParams) -> float:
    return math.exp(log_f_factor(p))


@lru_cache(maxsize=4096)
def coefficient_table(n: int, k: int, m: int) -> np.ndarray:
    """F(k, mu, j1, j2) / f_n indexed [j1, j2, mu]; zero outside the admissible ranges."""
    half = k // 2
    c = np.zeros((half + 1, half + 1, k + 1))
    log_fn = normalization_f(n, m).log_value
    lo = max(0, k - n // 2)
    for j1 in range(lo, half + 1):
        for j2 in range(lo, half + 1):
            mu_lo = max(0, 3 * k - 2 * (j1 + j2) - n)
            for mu in range(mu_lo, k - 2 * max(j1, j2) + 1):
                if (k - mu) % 2:
                    continue
                p = FFactorParams(k=k, mu=mu, j1=j1, j2=j2, n=n, m=m)
                c[j1, j2, mu] = math.exp(log_f_factor(p) - log_fn)
    c.setflags(write=False)
    return c


# --------------------------------------------------------------------------
# Permanents of same-mode matrices
# --------------------------------------------------------------------------


def delta_matrix(A_set: Sequence[int], B_set: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
    """S(i, j) = 1 iff x_{A_i} = x_{B_j}; index sets are 0-based positions into ``prefix``."""
    x = np.asarray(prefix)
    return (x[np.asarray(A_set, dtype=int)][:, None] == x[np.asarray(B_set, dtype=int)][None, :]).astype(float)


def delta_permanent(A_set: Sequence[int], B_set: Sequence[int], prefix: Sequence[int]) -> float:
    """Per(S_{A,B}) for the 0/1 same-mode matrix.

    S is a permuted block matrix of all-ones blocks, one per mode value, so the
    permanent is the product of the multiplicity factorials when the mode
    multisets of A and B agree and 0 otherwise. With pairwise-distinct modes
    this reduces to [A = B as value sets].
    """
    if len(A_set) != len(B_set):
        raise ValueError("A and B must have the same size")
    x = list(prefix)
    va = [x[i] for i in A_set]
    vb = [x[i] for i in B_set]
    named = set(A_set) | set(B_set)
    if len({x[i] for i in named}) == len(named):
        return 1.0 if set(va) == set(vb) else 0.0
    if sorted(va) != sorted(vb):
        return 0.0
    out = 1.0
    for v in set(va):
        out *= math.factorial(va.count(v))
    return out


# --------------------------------------------------------------------------
# Sub-hafnian cache
# --------------------------------------------------------------------------


@lru_cache(maxsize=64)
def multiset_keys(m: int) -> np.ndarray:
    """Fixed random 64-bit key per mode for the additive multiset hash."""
    keys = np.random.default_rng(0x5EED).integers(-(2**62), 2**62, size=m, dtype=np.int64)
    keys.setflags(write=False)
    return keys


class HafnianCache:
    """Sub-hafnians of W_x over every even subset of the prefix positions.

    Keyed by bitmask over positions. ``base`` covers the first k-1 positions of
    the prefix it was built for; a query that only changes the last position
    extends it without touching the stored entries. Build, ``freeze()``, then
    share read-only.
    """

    def __init__(self, W: np.ndarray):
        self.W = np.ascontiguousarray(W, dtype=np.complex128)
        self._prefix: tuple[int, ...] | None = None
        self._table: np.ndarray | None = None
        self._sig: np.ndarray | None = None
        self._frozen = False
        self.zkeys = multiset_keys(self.W.shape[0])

    def freeze(self) -> "HafnianCache":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def prefix(self):
        return self._prefix

    def build(self, base_prefix: Sequence[int]) -> None:
        """Populate the table for ``base_prefix`` (0-based modes)."""
        if self._frozen:
            raise RuntimeError("cache is frozen")
        base = tuple(int(v) for v in base_prefix)
        if len(base) > MAX_PREFIX:
            raise ValueError(f"prefix longer than {MAX_PREFIX}")
        idx = np.asarray(base, dtype=np.int64)
        Wx = np.ascontiguousarray(self.W[np.ix_(idx, idx)])
        self._table = K.haf_table(Wx)
        self._sig = K.multiset_hashes(idx, self.zkeys)
        self._prefix = base

    def tables_for(self, prefix: Sequence[int]):
        """(table, multiset hashes) for ``prefix``, reusing the stored base when it matches."""
        prefix = tuple(int(v) for v in prefix)
        if self._prefix == prefix:
            return self._table, self._sig
        if self._prefix is None or self._prefix != prefix[:-1]:
            if self._frozen:
                raise RuntimeError("frozen cache does not cover this prefix")
            self.build(prefix[:-1])
        if not prefix:
            return self._table, self._sig
        new = prefix[-1]
        base_idx = np.asarray(self._prefix, dtype=np.int64)
        wnew = np.ascontiguousarray(self.W[new, base_idx])
        table = K.extend_table(self._table, wnew)
        sig = K.multiset_hashes(np.asarray(prefix, dtype=np.int64), self.zkeys)
        return table, sig

    def get(self, mask: int) -> complex:
        if self._table is None:
            raise KeyError(mask)
        if bin(mask).count("1") % 2 or mask >= self._table.shape[0]:
            raise KeyError(mask)
        return complex(self._table[mask])

    def __contains__(self, mask: int) -> bool:
        return self._table is not None and 0 <= mask < self._table.shape[0] and bin(mask).count("1") % 2 == 0

    def __len__(self) -> int:
        if self._table is None:
            return 0
        k = len(self._prefix)
        return 2 ** (k - 1) if k else 1


# --------------------------------------------------------------------------
# Marginals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginalQuery:
    """Prefix is a 1-based position string."""

    W: np.ndarray
    prefix: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(v) for v in self.prefix))
        if self.n < 0 or self.n % 2:
            raise ValueError("n must be a non-negative even integer")
        if len(self.prefix) > self.n:
            raise ValueError("prefix longer than n")
        if any(not 1 <= v <= self.m for v in self.prefix):
            raise IndexError(f"prefix entries must lie in [1, {self.m}]")

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def k(self) -> int:
        return len(self.prefix)


def _finish(value: float) -> float:
    if value < 0:
        if value < -NEG_CLAMP:
            raise InconsistentResult(f"marginal evaluated to {value:.3e}")
        return 0.0
    return value


def marginal_q_ops(query: MarginalQuery, mode: str = "exp-space", cache: HafnianCache | None = None):
    """(q_n(prefix), nominal operation count)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    k = query.k
    if k > MAX_PREFIX:
        raise ValueError(f"prefix longer than {MAX_PREFIX}")
    x0 = np.asarray(query.prefix, dtype=np.int64) - 1
    cf = mode == "collision-free"
    if cf and len(set(query.prefix)) != k:
        raise ValueError("collision-free mode needs pairwise-distinct prefix entries")
    W = np.ascontiguousarray(query.W, dtype=np.complex128)
    Wx = np.ascontiguousarray(W[np.ix_(x0, x0)])
    coef = coefficient_table(query.n, k, query.m)
    ops = 0.0
    if mode == "exp-space":
        if cache is None:
            cache = HafnianCache(W)
        table, sig = cache.tables_for(x0)
        ops += k * 2.0**k
        use_table = True
    else:
        table = np.zeros(1, dtype=np.complex128)
        sig = np.zeros(1, dtype=np.int64)
        use_table = False
    value, kops = K.marginal_sum(Wx, x0, query.n, coef, use_table, table, sig, cf)
    return _finish(value), ops + kops


def marginal_q(query: MarginalQuery, mode: str = "exp-space", cache: HafnianCache | None = None) -> float:
    """q_n(x_1..x_k) through the hafnian/permanent decomposition."""
    return marginal_q_ops(query, mode, cache)[0]


def candidate_marginals(W: np.ndarray, prefix: Sequence[int], n: int, mode: str = "exp-space", threads: int = 1):
    """(q_n(prefix + (l,)) for l = 1..m, total operation count) in one kernel pass.

    Collision-free mode gives 0 for candidates already in the prefix. With
    ``threads > 1`` the candidates are split into contiguous chunks, so the
    result does not depend on the thread count.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    W = np.ascontiguousarray(W, dtype=np.complex128)
    m = W.shape[0]
    x0 = np.asarray(prefix, dtype=np.int64).reshape(-1) - 1
    k = x0.shape[0] + 1
    if k > n:
        raise ValueError("prefix must be shorter than n")
    if k > MAX_PREFIX:
        raise ValueError(f"prefix longer than {MAX_PREFIX}")
    if x0.size and (x0.min() < 0 or x0.max() >= m):
        raise IndexError(f"prefix entries must lie in [1, {m}]")
    cf = mode == "collision-free"
    if cf and len(set(x0.tolist())) != x0.shape[0]:
        raise ValueError("collision-free mode needs pairwise-distinct prefix entries")
    coef = coefficient_table(n, k, m)
    use_table = mode == "exp-space"
    zkeys = multiset_keys(m)

    def run(cands):
        return K.candidate_sums(W, x0, cands, n, coef, use_table, zkeys, cf)

    cands = np.arange(m, dtype=np.int64)
    if threads > 1 and m > 1:
        chunks = [c for c in np.array_split(cands, min(threads, m)) if c.size]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
        values = np.concatenate([p[0] for p in parts])
        ops = sum(p[1] for p in parts)
    else:
        values, ops = run(cands)
    if values.min(initial=0.0) < -NEG_CLAMP:
        raise InconsistentResult(f"marginal evaluated to {values.min():.3e}")
    return np.maximum(values, 0.0), float(ops)


def marginal_q_bruteforce(query: MarginalQuery) -> float:
    """Literal sum of |Haf(W_x)|^2 / f_n over all m^{n-k} completions."""
    count = query.m ** (query.n - query.k)
    if count > BRUTE_FORCE_LIMIT:
        raise GuardExceeded(f"{count} completions exceed the limit of {BRUTE_FORCE_LIMIT}")
    W = np.ascontiguousarray(query.W, dtype=np.complex128)
    x0 = np.asarray(query.prefix, dtype=np.int64) - 1
    total = K.completion_abs2_sum(W, x0, query.n)
    return total / normalization_f(query.n, query.m).value


# --------------------------------------------------------------------------
# Splitting identity
# --------------------------------------------------------------------------


def hafnian_split_rhs(W: np.ndarray, x: Sequence[int], k: int) -> complex:
    """Haf(W_x) rebuilt as sum_j sum Haf(R_a) Haf(T_a') Per(G_{e,e'}).

    R is the first k positions, T the rest; a holds the 2j prefix vertices
    matched inside R, a' the tail vertices matched inside T, and the
    remaining k - 2j prefix vertices are matched across to the rest of T.
    """
    x = tuple(int(v) for v in x)
    n = len(x)
    if n % 2 or not 0 <= k <= n:
        raise ValueError("need even |x| and 0 <= k <= |x|")
    Wx = submatrix_wx(W, x)
    head = range(k)
    tail = range(k, n)
    total = 0j
    for j in range(max(0, k - n // 2), k // 2 + 1):
        for a in itertools.combinations(head, 2 * j):
            e = [i for i in head if i not in a]
            Ra = Wx[np.ix_(a, a)]
            h_a = hafnian(Ra, mode="enumeration")
            for a2 in itertools.combinations(tail, n - 2 * k + 2 * j):
                e2 = [i for i in tail if i not in a2]
                Ta = Wx[np.ix_(a2, a2)]
                G = Wx[np.ix_(e, e2)]
                total += h_a * hafnian(Ta, mode="enumeration") * permanent(G)
    return total


def hafnian_split_check(W: np.ndarray, x: Sequence[int], k: int, rtol: float = 1e-9) -> bool:
    lhs = hafnian(submatrix_wx(W, x), mode="enumeration")
    rhs = hafnian_split_rhs(W, x, k)
    return abs(lhs - rhs) <= rtol * max(abs(lhs), 1e-300) or abs(lhs - rhs) < 1e-14
