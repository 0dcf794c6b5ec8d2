"""Statistical and algebraic checks of the samplers, and the scaling benchmark."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from . import _kernels as K
from .linalg import haar_unitary
from .marginals import BRUTE_FORCE_LIMIT, GuardExceeded, normalization_f
from .sampler import ChainSampler, ExactTable, SampleRecord, sample_configuration

POOL_MIN_EXPECTED = 5.0
HIST_BIN_WIDTH = 0.5
# analytic exponents of the per-sample cost bounds, base 2
BOUND_EXPONENTS = {"poly-space": 8 / 3, "exp-space": 5 / 2}


@dataclass
class DistributionReport:
    tvd: float
    chi2_stat: float
    chi2_dof: int
    chi2_pvalue: float
    sample_count: int
    support_size: int
    hist_edges: list[float]
    hist_counts: list[int]
    hist_expected: list[float]

    def rejects(self, alpha: float = 1e-3) -> bool:
        return self.chi2_pvalue < alpha

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for lo, hi, c in zip(self.hist_edges[:-1], self.hist_edges[1:], self.hist_counts):
            w.writerow([lo, hi, c])
        return buf.getvalue()


def pooled_chi2(observed: np.ndarray, expected: np.ndarray, min_expected: float = POOL_MIN_EXPECTED):
    """Pearson chi^2 after pooling every cell with expected count below ``min_expected``.

    Returns (statistic, degrees of freedom, p-value). Observations in a cell of
    zero expected mass make the statistic infinite.
    """
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if np.any((expected <= 0) & (observed > 0)):
        return math.inf, max(len(expected) - 1, 1), 0.0
    big = expected >= min_expected
    obs = list(observed[big])
    exp = list(expected[big])
    small_exp = expected[~big].sum()
    small_obs = observed[~big].sum()
    if small_exp > 0:
        if small_exp >= min_expected or not exp:
            obs.append(small_obs)
            exp.append(small_exp)
        else:
            i = int(np.argmin(exp))
            obs[i] += small_obs
            exp[i] += small_exp
    obs = np.array(obs)
    exp = np.array(exp)
    dof = len(exp) - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return stat, dof, float(stats.chi2.sf(stat, dof))


def _config_of(item) -> tuple[int, ...]:
    if isinstance(item, SampleRecord):
        return item.s
    return tuple(int(v) for v in item)


def compare_to_exact(samples: Iterable, table: ExactTable, bin_width: float = HIST_BIN_WIDTH) -> DistributionReport:
    """TVD, pooled chi^2 and the -log p histogram of samples against an exact table.

    ``samples`` holds SampleRecords or bare occupation tuples.
    """
    index = table.index_of()
    counts = np.zeros(len(table.probs))
    N = 0
    for item in samples:
        if isinstance(item, SampleRecord) and item.n != table.n:
            raise ValueError(f"sample has n={item.n}, table has n={table.n}")
        s = _config_of(item)
        if len(s) != table.m:
            raise ValueError(f"sample has {len(s)} modes, table has m={table.m}")
        try:
            counts[index[s]] += 1
        except KeyError:
            raise ValueError(f"configuration {s} is not in the table") from None
        N += 1
    if N == 0:
        raise ValueError("no samples")
    return _report_from_counts(counts, table.probs, bin_width)


def _report_from_counts(counts: np.ndarray, probs: np.ndarray, bin_width: float) -> DistributionReport:
    N = int(counts.sum())
    tvd = 0.5 * float(np.abs(counts / N - probs).sum())
    stat, dof, pval = pooled_chi2(counts, N * probs)
    pos = probs > 0
    nlp = np.full(len(probs), np.inf)
    nlp[pos] = -np.log(probs[pos])
    seen = counts > 0
    lo = math.floor(nlp[seen].min() / bin_width) * bin_width
    hi = math.ceil(nlp[seen].max() / bin_width) * bin_width
    if hi <= lo:
        hi = lo + bin_width
    edges = np.arange(lo, hi + bin_width / 2, bin_width)
    hist, _ = np.histogram(nlp[seen], bins=edges, weights=counts[seen])
    exp_hist, _ = np.histogram(nlp[pos], bins=edges, weights=N * probs[pos])
    return DistributionReport(
        tvd=tvd,
        chi2_stat=stat,
        chi2_dof=dof,
        chi2_pvalue=pval,
        sample_count=N,
        support_size=int(pos.sum()),
        hist_edges=[float(e) for e in edges],
        hist_counts=[int(c) for c in hist],
        hist_expected=[float(e) for e in exp_hist],
    )


def resample_table(table: ExactTable, count: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """``count`` draws straight from an exact table (vectorised interval sampling)."""
    u = rng.random(count) * table.cdf[-1]
    idx = np.minimum(np.searchsorted(table.cdf, u, side="right"), len(table.probs) - 1)
    return [tuple(int(v) for v in table.configs[i]) for i in idx]


@dataclass
class NormalizationResult:
    n: int
    m: int
    total: float
    expected: float

    @property
    def rel_error(self) -> float:
        return abs(self.total - self.expected) / self.expected

    def passed(self, rtol: float = 1e-9) -> bool:
        return self.rel_error <= rtol


def normalization_sum(W: np.ndarray, n: int) -> NormalizationResult:
    m = W.shape[0]
    if m**n > BRUTE_FORCE_LIMIT:
        raise GuardExceeded(f"m^n = {m ** n} exceeds the limit of {BRUTE_FORCE_LIMIT}")
    total = K.completion_abs2_sum(np.ascontiguousarray(W, dtype=np.complex128), np.zeros(0, dtype=np.int64), n)
    return NormalizationResult(n=n, m=m, total=float(total), expected=normalization_f(n, m).value)


def check_normalization(W: np.ndarray, n: int, m: int | None = None, rtol: float = 1e-9) -> bool:
    """sum over x in [m]^n of |Haf(W_x)|^2 equals f_n (requires W unitary)."""
    if m is not None and m != W.shape[0]:
        raise ValueError(f"W is {W.shape[0]}x{W.shape[0]}, not {m}x{m}")
    return normalization_sum(W, n).passed(rtol)


# --------------------------------------------------------------------------
# Scaling benchmark
# --------------------------------------------------------------------------


@dataclass
class ScalingPoint:
    n: int
    m: int
    mean_wall_time: float
    mean_ops: float
    repetitions: int


@dataclass
class ScalingReport:
    mode: str
    points: list[ScalingPoint]
    fitted_exponent: float | None
    fitted_ops_exponent: float | None
    bound_exponent: float | None
    partial: bool
    monotone: bool
    machine: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _slope(ns, ys) -> float | None:
    if len(ns) < 2:
        return None
    return float(np.polyfit(np.asarray(ns, float), np.log2(np.asarray(ys, float)), 1)[0])


def machine_info() -> dict:
    import numba

    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "numpy": np.__version__,
        "numba": numba.__version__,
    }


def bench_scaling(
    n_list: Sequence[int],
    m_rule: Callable[[int], int] = lambda n: n * n,
    mode: str = "exp-space",
    repetitions: int = 3,
    seed: int = 0,
    min_time: float = 0.2,
    max_repetitions: int = 1000,
) -> ScalingReport:
    """Time single chain samples for each n with m = m_rule(n) and fit log2(time) against n.

    Every repetition uses a fresh sampler so nothing is memoised across samples.
    Fast points are repeated beyond ``repetitions`` until ``min_time`` seconds
    have been timed, which keeps sub-millisecond means stable.
    """
    if not n_list:
        raise ValueError("n_list is empty")
    # compile the kernels before anything is timed
    warm = haar_unitary(4, seed).W
    sample_configuration(warm, 4, np.random.default_rng(seed), mode, ChainSampler(warm, 4, mode, memoize=False))
    points = []
    for n in n_list:
        if n <= 0 or n % 2:
            raise ValueError(f"n = {n} is not a positive even integer")
        m = m_rule(n)
        W = haar_unitary(m, seed + n).W
        times, ops = [], []
        rep = 0
        while rep < repetitions or (sum(times) < min_time and rep < max_repetitions):
            chain = ChainSampler(W, n, mode, memoize=False)
            rng = np.random.default_rng([seed, n, rep])
            t0 = time.perf_counter()
            sample_configuration(W, n, rng, mode, chain)
            times.append(time.perf_counter() - t0)
            ops.append(chain.ops)
            rep += 1
        points.append(ScalingPoint(n=n, m=m, mean_wall_time=float(np.mean(times)), mean_ops=float(np.mean(ops)),
                                   repetitions=rep))
    ns = [p.n for p in points]
    tt = [p.mean_wall_time for p in points]
    return ScalingReport(
        mode=mode,
        points=points,
        fitted_exponent=_slope(ns, tt),
        fitted_ops_exponent=_slope(ns, [max(p.mean_ops, 1.0) for p in points]),
        bound_exponent=BOUND_EXPONENTS.get(mode),
        partial=len(points) < 2,
        monotone=all(b >= a for a, b in zip(tt, tt[1:])),
        machine=machine_info(),
    )
