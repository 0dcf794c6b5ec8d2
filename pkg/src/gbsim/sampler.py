"""Chain-rule configuration sampler, brute-force interval sampler, and the full pipeline."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .linalg import read_config
from .marginals import (
    BRUTE_FORCE_LIMIT,
    MODES,
    GuardExceeded,
    candidate_marginals,
    normalization_f,
)
from .photon_number import SqueezeSetup, photon_count_pmf, sample_photon_count

CHAIN_RTOL = 1e-8


class DegenerateDistribution(ArithmeticError):
    pass


@dataclass(frozen=True)
class SampleRecord:
    n: int
    s: tuple[int, ...]
    x: tuple[int, ...]
    seed: int | None
    mode: str
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n": self.n,
            "s": list(self.s),
            "x": list(self.x),
            "mode": self.mode,
            "wall_time_s": self.wall_time_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SampleRecord":
        return cls(
            n=int(d["n"]),
            s=tuple(d["s"]),
            x=tuple(d["x"]),
            seed=d.get("seed"),
            mode=d["mode"],
            wall_time_s=float(d.get("wall_time_s", 0.0)),
        )


def write_jsonl(records: Iterable[SampleRecord], fh) -> None:
    for rec in records:
        fh.write(rec.to_json() + "\n")


def read_jsonl(fh) -> list[SampleRecord]:
    return [SampleRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


@dataclass(frozen=True)
class ConditionalWeights:
    weights: np.ndarray
    ops: float = 0.0

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def conditional_weights(
    W: np.ndarray,
    prefix: Sequence[int],
    n: int,
    mode: str = "exp-space",
    threads: int = 1,
) -> ConditionalWeights:
    """weights[l-1] = q_n(prefix + (l,)) for every candidate mode l."""
    _check_mode(mode)
    prefix = tuple(int(v) for v in prefix)
    if len(prefix) >= n:
        raise ValueError("prefix must be shorter than n")
    w, ops = candidate_marginals(W, prefix, n, mode, threads)
    if not np.any(w > 0):
        raise DegenerateDistribution(f"all conditional weights vanish after prefix {prefix}")
    return ConditionalWeights(weights=w, ops=ops)


class ChainSampler:
    """Draws position strings x_1..x_n one coordinate at a time.

    Conditional weights are memoised per prefix for a fixed (W, n, mode). The
    marginal is symmetric in its prefix, so the memo key and the evaluation
    both use the sorted prefix; this keeps every stored value independent of
    which sample (or thread) computed it first.
    """

    def __init__(self, W: np.ndarray, n: int, mode: str = "exp-space", threads: int = 1, memoize: bool = True):
        _check_mode(mode)
        if n < 0 or n % 2:
            raise ValueError("n must be a non-negative even integer")
        m = W.shape[0]
        if mode == "collision-free" and n > m:
            raise ValueError(f"collision-free mode needs n <= m (got n={n}, m={m})")
        self.W = np.ascontiguousarray(W, dtype=np.complex128)
        self.n = n
        self.mode = mode
        self.threads = threads
        self.memoize = memoize
        self._memo: dict[tuple[int, ...], np.ndarray] = {}
        self.ops = 0.0

    def weights(self, prefix: Sequence[int]) -> np.ndarray:
        key = tuple(sorted(int(v) for v in prefix))
        w = self._memo.get(key) if self.memoize else None
        if w is None:
            cw = conditional_weights(self.W, key, self.n, self.mode, self.threads)
            w = cw.weights
            self.ops += cw.ops
            if self.memoize:
                self._memo[key] = w
        return w

    def draw(self, rng: np.random.Generator) -> tuple[int, ...]:
        x: list[int] = []
        prev = 1.0
        for _ in range(self.n):
            w = self.weights(x)
            total = w.sum()
            if __debug__ and self.mode != "collision-free":
                assert abs(total - prev) <= CHAIN_RTOL * max(prev, 1e-300), (total, prev)
            cdf = np.cumsum(w)
            u = rng.random() * cdf[-1]
            idx = int(np.searchsorted(cdf, u, side="right"))
            idx = min(idx, len(w) - 1)
            while w[idx] <= 0:  # u landed on the top edge
                idx -= 1
            x.append(idx + 1)
            prev = w[idx]
        return tuple(x)


def sample_configuration(
    W: np.ndarray,
    n: int,
    rng: np.random.Generator,
    mode: str = "exp-space",
    sampler: ChainSampler | None = None,
    seed: int | None = None,
) -> SampleRecord:
    """Sample s from p_n(s) by drawing x from q_n(x) and counting occupations."""
    if n < 0 or n % 2:
        raise ValueError("n must be a non-negative even integer")
    if sampler is None:
        sampler = ChainSampler(W, n, mode, memoize=False)
    elif sampler.n != n or sampler.mode != mode:
        raise ValueError("sampler was built for a different (n, mode)")
    t0 = time.perf_counter()
    x = sampler.draw(rng)
    s = read_config(x, W.shape[0])
    return SampleRecord(
        n=n,
        s=tuple(int(v) for v in s),
        x=x,
        seed=seed,
        mode=mode,
        wall_time_s=time.perf_counter() - t0,
    )


# --------------------------------------------------------------------------
# Brute force
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactTable:
    """p_n(s) over every configuration, ordered lexicographically by sorted position string."""

    n: int
    m: int
    configs: np.ndarray  # (count, m) occupations
    probs: np.ndarray
    cdf: np.ndarray = field(repr=False)

    def index_of(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in s): i for i, s in enumerate(self.configs)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "prob"])
        for s, p in zip(self.configs, self.probs):
            w.writerow([" ".join(str(int(v)) for v in s), repr(float(p))])
        return buf.getvalue()


def exact_table(W: np.ndarray, n: int) -> ExactTable:
    """Enumerate all C(m+n-1, n) configurations with p_n(s) = |Haf(W_s)|^2 N_p / f_n."""
    if n < 0 or n % 2:
        raise ValueError("n must be a non-negative even integer")
    m = W.shape[0]
    count = math.comb(m + n - 1, n)
    if count > BRUTE_FORCE_LIMIT:
        raise GuardExceeded(f"{count} configurations exceed the limit of {BRUTE_FORCE_LIMIT}")
    xs = np.array(list(itertools.combinations_with_replacement(range(m), n)), dtype=np.int64).reshape(count, n)
    abs2 = K.haf_abs2_rows(np.ascontiguousarray(W, dtype=np.complex128), xs)
    configs = np.zeros((count, m), dtype=np.int64)
    for j in range(m):
        configs[:, j] = (xs == j).sum(axis=1)
    log_np = math.lgamma(n + 1) - np.sum([[math.lgamma(v + 1) for v in row] for row in configs], axis=1)
    probs = abs2 * np.exp(log_np - normalization_f(n, m).log_value)
    cdf = np.cumsum(probs)
    return ExactTable(n=n, m=m, configs=configs, probs=probs, cdf=cdf)


def brute_force_sample(
    W: np.ndarray,
    n: int,
    rng: np.random.Generator,
    table: ExactTable | None = None,
    u: float | None = None,
    seed: int | None = None,
) -> SampleRecord:
    """Partition [0, 1] into intervals of length p_n(s) and return the one containing a uniform draw."""
    t0 = time.perf_counter()
    if table is None:
        table = exact_table(W, n)
    w = rng.random() if u is None else u
    idx = int(np.searchsorted(table.cdf, w * table.cdf[-1], side="right"))
    idx = min(idx, len(table.probs) - 1)
    while table.probs[idx] <= 0:
        idx -= 1
    s = table.configs[idx]
    x = tuple(int(v) for v in np.repeat(np.arange(1, table.m + 1), s))
    return SampleRecord(
        n=n,
        s=tuple(int(v) for v in s),
        x=x,
        seed=seed,
        mode="brute-force",
        wall_time_s=time.perf_counter() - t0,
    )


# --------------------------------------------------------------------------
# Pipeline
# --------------------------------------------------------------------------


def derive_seed(root_seed: int, index: int) -> int:
    """64-bit per-sample seed from (root seed, sample index)."""
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class Pipeline:
    """Photon number from the truncated negative binomial, then a configuration."""

    def __init__(self, setup: SqueezeSetup, W: np.ndarray, mode: str = "exp-space", threads: int = 1):
        _check_mode(mode)
        if W.shape[0] != setup.m:
            raise ValueError(f"W is {W.shape[0]}x{W.shape[0]} but setup has m={setup.m}")
        self.setup = setup
        self.W = np.ascontiguousarray(W, dtype=np.complex128)
        self.mode = mode
        self.threads = threads
        self.pmf = photon_count_pmf(setup)
        self._samplers: dict[int, ChainSampler] = {}

    def sampler_for(self, n: int) -> ChainSampler:
        if n not in self._samplers:
            self._samplers[n] = ChainSampler(self.W, n, self.mode, self.threads)
        return self._samplers[n]

    def run(self, rng: np.random.Generator, seed: int | None = None) -> SampleRecord:
        t0 = time.perf_counter()
        n = sample_photon_count(self.pmf, rng)
        rec = sample_configuration(self.W, n, rng, self.mode, self.sampler_for(n), seed=seed)
        return SampleRecord(n=rec.n, s=rec.s, x=rec.x, seed=seed, mode=self.mode,
                            wall_time_s=time.perf_counter() - t0)


def run_pipeline(setup: SqueezeSetup, W: np.ndarray, rng: np.random.Generator, mode: str = "exp-space") -> SampleRecord:
    return Pipeline(setup, W, mode).run(rng)


def sample_many(
    W: np.ndarray,
    count: int,
    root_seed: int,
    mode: str = "exp-space",
    n: int | None = None,
    setup: SqueezeSetup | None = None,
    threads: int = 1,
) -> list[SampleRecord]:
    """``count`` independent records; sample i uses ``derive_seed(root_seed, i)``.

    Exactly one of ``n`` (fixed photon number) and ``setup`` (photon number
    drawn per sample) must be given. Output does not depend on ``threads``.
    """
    if (n is None) == (setup is None):
        raise ValueError("give exactly one of n and setup")
    if setup is not None:
        pipe = Pipeline(setup, W, mode)

        def one(i):
            seed = derive_seed(root_seed, i)
            return pipe.run(np.random.default_rng(seed), seed=seed)
    else:
        chain = ChainSampler(W, n, mode)

        def one(i):
            seed = derive_seed(root_seed, i)
            return sample_configuration(W, n, np.random.default_rng(seed), mode, chain, seed=seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(count)))
    return [one(i) for i in range(count)]
