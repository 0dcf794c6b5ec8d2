"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 a guard refused the run.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .linalg import haar_unitary, load_unitary
from .marginals import MODES, GuardExceeded, MarginalQuery, hafnian_split_check, marginal_q, marginal_q_bruteforce
from .photon_number import DEFAULT_CUTOFF, SqueezeSetup, photon_count_pmf
from .sampler import SampleRecord, exact_table, sample_many, write_jsonl
from .validation import bench_scaling, compare_to_exact, normalization_sum, resample_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_REFUSED = 0, 1, 2, 3

MODE_ALIASES = {"poly": "poly-space", "exp": "exp-space", "cf": "collision-free"}
MODE_ALIASES.update({m: m for m in MODES})


class UsageError(Exception):
    pass


def _mode(name: str) -> str:
    try:
        return MODE_ALIASES[name]
    except KeyError:
        raise UsageError(f"unknown mode {name!r}") from None


@dataclass
class RunConfig:
    m: int
    r: float | None = None
    cutoff: float = DEFAULT_CUTOFF
    n: int | None = None
    mode: str = "exp-space"
    samples: int = 1
    seed: int = 0
    unitary_seed: int | None = None
    unitary_file: str | None = None
    output: str | None = None
    threads: int = 1

    def validate(self) -> None:
        if (self.r is None) == (self.n is None):
            raise UsageError("give exactly one of --r (photon number drawn per sample) and --n (fixed)")
        if self.n is not None and (self.n < 0 or self.n % 2):
            raise UsageError("--n must be a non-negative even integer")
        if self.m < 2:
            raise UsageError("--m must be at least 2")
        if self.samples < 0:
            raise UsageError("--samples must be non-negative")
        self.mode = _mode(self.mode)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["run"] = {f.name: "" if getattr(self, f.name) is None else str(getattr(self, f.name)) for f in fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        sec = cp["run"]
        kw = {}
        for f in fields(cls):
            if f.name not in sec or sec[f.name] == "":
                continue
            raw = sec[f.name]
            if f.name in ("m", "n", "samples", "seed", "unitary_seed", "threads"):
                kw[f.name] = int(raw)
            elif f.name in ("r", "cutoff"):
                kw[f.name] = float(raw)
            else:
                kw[f.name] = raw
        return cls(**kw)


def _interferometer(cfg: RunConfig):
    if cfg.unitary_file:
        inter = load_unitary(cfg.unitary_file)
        if inter.m != cfg.m:
            raise UsageError(f"unitary file has m={inter.m}, config has m={cfg.m}")
        return inter
    return haar_unitary(cfg.m, cfg.seed if cfg.unitary_seed is None else cfg.unitary_seed)


def mode_frequencies(records: list[SampleRecord], m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode counts of single-photon (s_j = 1) and multi-photon (s_j > 1) events."""
    single = np.zeros(m, dtype=int)
    multi = np.zeros(m, dtype=int)
    for rec in records:
        s = np.asarray(rec.s)
        single += s == 1
        multi += s > 1
    return single, multi


def cmd_sample(cfg: RunConfig, freq_out: str | None = None) -> int:
    cfg.validate()
    if cfg.mode == "collision-free" and cfg.n is not None and cfg.n > cfg.m:
        print(f"refused: collision-free mode needs n <= m (n={cfg.n}, m={cfg.m})", file=sys.stderr)
        return EXIT_REFUSED
    inter = _interferometer(cfg)
    setup = SqueezeSetup(cfg.m, cfg.r, cfg.cutoff) if cfg.r is not None else None
    out_path = Path(cfg.output) if cfg.output else None
    t0 = time.perf_counter()
    try:
        records = sample_many(inter.W, cfg.samples, cfg.seed, cfg.mode, n=cfg.n, setup=setup, threads=cfg.threads)
    except Exception:
        if out_path is not None:
            out_path.write_text("")
        raise
    elapsed = time.perf_counter() - t0
    if out_path is not None:
        with open(out_path, "w") as fh:
            write_jsonl(records, fh)
    else:
        write_jsonl(records, sys.stdout)
    single, multi = mode_frequencies(records, cfg.m)
    if freq_out:
        with open(freq_out, "w") as fh:
            fh.write("mode,single,multi\n")
            for j in range(cfg.m):
                fh.write(f"{j + 1},{single[j]},{multi[j]}\n")
    ns = [r.n for r in records]
    collided = sum(1 for r in records if max(r.s, default=0) > 1)
    summary = {
        "samples": len(records),
        "mean_n": float(np.mean(ns)) if ns else 0.0,
        "collision_fraction": collided / len(records) if records else 0.0,
        "single_photon_events": int(single.sum()),
        "multi_photon_events": int(multi.sum()),
        "wall_time_s": elapsed,
    }
    print(json.dumps(summary), file=sys.stderr)
    return EXIT_OK


def cmd_pmf(m: int, r: float, c: float, out: str | None) -> int:
    pmf = photon_count_pmf(SqueezeSetup(m, r, c))
    text = pmf.to_csv()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    print(json.dumps({"mode_n": pmf.mode, "n_most": SqueezeSetup(m, r, c).n_most, "raw_mass": pmf.raw_mass}),
          file=sys.stderr)
    return EXIT_OK


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def validate_normalization(n: int, m: int, trials: int, seed: int, rtol: float = 1e-9) -> dict:
    worst = 0.0
    for t in range(trials):
        res = normalization_sum(haar_unitary(m, seed + t).W, n)
        worst = max(worst, res.rel_error)
    return {"suite": "normalization", "n": n, "m": m, "trials": trials, "max_rel_error": worst,
            "passed": worst <= rtol}


def validate_marginals(n: int, m: int, trials: int, seed: int, rtol: float = 1e-9) -> dict:
    rng = np.random.default_rng(seed)
    W = haar_unitary(m, seed).W
    worst = 0.0
    checked = 0
    for _ in range(trials):
        x = tuple(int(v) for v in rng.integers(1, m + 1, size=n))
        for k in range(n + 1):
            q = MarginalQuery(W=W, prefix=x[:k], n=n)
            ref = marginal_q_bruteforce(q)
            modes = ["poly-space", "exp-space"]
            if len(set(x[:k])) == k:
                modes.append("collision-free")
            for mode in modes:
                worst = max(worst, _rel(marginal_q(q, mode), ref))
                checked += 1
    return {"suite": "marginals", "n": n, "m": m, "trials": trials, "comparisons": checked,
            "max_rel_error": worst, "passed": worst <= rtol}


def validate_split(n: int, m: int, trials: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    failures = 0
    for t in range(trials):
        W = haar_unitary(m, seed + t).W
        x = rng.integers(1, m + 1, size=n)
        k = int(rng.integers(0, n + 1))
        failures += not hafnian_split_check(W, x, k)
    return {"suite": "split", "n": n, "m": m, "trials": trials, "failures": failures, "passed": failures == 0}


def validate_distribution(n: int, m: int, samples: int, seed: int, mode: str, tvd_max: float,
                          alpha: float, hist_out: str | None = None) -> dict:
    W = haar_unitary(m, seed).W
    table = exact_table(W, n)
    records = sample_many(W, samples, seed, mode, n=n)
    rep = compare_to_exact(records, table)
    brute_rng = np.random.default_rng([seed, 1])
    brute = compare_to_exact(resample_table(table, samples, brute_rng), table)
    if hist_out:
        Path(hist_out).write_text(rep.histogram_csv())
    ok = rep.tvd < tvd_max and not rep.rejects(alpha) and brute.tvd < tvd_max and not brute.rejects(alpha)
    return {"suite": "distribution", "n": n, "m": m, "samples": samples, "mode": mode,
            "chain": {"tvd": rep.tvd, "chi2": rep.chi2_stat, "dof": rep.chi2_dof, "pvalue": rep.chi2_pvalue},
            "brute_force": {"tvd": brute.tvd, "chi2": brute.chi2_stat, "dof": brute.chi2_dof,
                            "pvalue": brute.chi2_pvalue},
            "tvd_max": tvd_max, "alpha": alpha, "passed": ok}


def cmd_validate(args) -> int:
    if args.suite == "normalization":
        rep = validate_normalization(args.n, args.m, args.trials, args.seed)
    elif args.suite == "marginals":
        rep = validate_marginals(args.n, args.m, args.trials, args.seed)
    elif args.suite == "split":
        rep = validate_split(args.n, args.m, args.trials, args.seed)
    else:
        rep = validate_distribution(args.n, args.m, args.samples, args.seed, _mode(args.mode), args.tvd_max,
                                    args.alpha, args.hist_out)
    text = json.dumps(rep, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_bench(n_list: list[int], mode: str, reps: int, out: str | None, seed: int = 0) -> int:
    if not n_list:
        raise UsageError("--n needs at least one photon number")
    report = bench_scaling(n_list, lambda n: n * n, mode, reps, seed)
    text = report.to_json()
    if out:
        Path(out).write_text(text)
    print(text)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gbsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw samples, JSON lines output")
    s.add_argument("--config", help="read a run configuration (INI, section [run])")
    s.add_argument("--save-config", help="write the effective configuration and continue")
    s.add_argument("--m", type=int)
    s.add_argument("--r", type=float)
    s.add_argument("--c", "--cutoff", dest="cutoff", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--mode")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--unitary-seed", type=int)
    s.add_argument("--unitary", dest="unitary_file", help="JSON unitary file")
    s.add_argument("--out", dest="output")
    s.add_argument("--threads", type=int)
    s.add_argument("--freq-out", help="per-mode single/multi photon counts as CSV")

    q = sub.add_parser("pmf", help="truncated photon-number distribution as CSV")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--r", type=float, required=True)
    q.add_argument("--c", "--cutoff", dest="cutoff", type=float, default=DEFAULT_CUTOFF)
    q.add_argument("--out")

    v = sub.add_parser("validate", help="run a validation suite")
    v.add_argument("suite", choices=["normalization", "marginals", "split", "distribution"])
    v.add_argument("--n", type=int, default=4)
    v.add_argument("--m", type=int, default=4)
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--mode", default="exp-space")
    v.add_argument("--tvd-max", type=float, default=0.05)
    v.add_argument("--alpha", type=float, default=1e-3)
    v.add_argument("--hist-out", help="-log p histogram as CSV")
    v.add_argument("--out")

    b = sub.add_parser("bench", help="per-sample time against n with m = n^2")
    b.add_argument("--n", type=_int_list, required=True)
    b.add_argument("--mode", default="exp-space")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    return p


def _sample_config(args) -> RunConfig:
    cfg = RunConfig.from_ini(Path(args.config).read_text()) if args.config else None
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    if cfg is None:
        if "m" not in overrides:
            raise UsageError("--m is required without --config")
        cfg = RunConfig(**overrides)
    else:
        for k, val in overrides.items():
            setattr(cfg, k, val)
    if args.save_config:
        Path(args.save_config).write_text(cfg.to_ini())
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sample":
            return cmd_sample(_sample_config(args), args.freq_out)
        if args.command == "pmf":
            return cmd_pmf(args.m, args.r, args.cutoff, args.out)
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_bench(args.n, _mode(args.mode), args.reps, args.out, args.seed)
    except UsageError as exc:
        parser.error(str(exc))
    except GuardExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except ValueError as exc:
        if "collision-free" in str(exc):
            print(f"refused: {exc}", file=sys.stderr)
            return EXIT_REFUSED
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
