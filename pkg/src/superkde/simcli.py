"""Command-line Monte Carlo harness and experiment plumbing.

``superkde sim`` draws seeded samples, runs every configured selector on
the *same* sample (paired design), scores each selection with the exact
Fourier-form ISE, and writes one CSV row per (sample size, method).

Reproducibility contract: the stream for replication ``rep`` at size ``n``
is keyed by ``(seed, (n << 32) | rep)``, so the CSV is byte-identical
across runs and across worker counts. The CV and flat-region selectors
smooth with the configured kernel; the plug-in selector always uses the
Gaussian kernel it is defined for.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .densities import get_density, sample
from .errors import ConfigError, NoFlatRegion, SuperkdeError
from .kernels import classify, get_kernel, check_admissible
from .numerics import PRNG_ALGORITHM, RngStream
from .risk import ise_exact, mise_exact
from .selectors import (
    PolitisSettings,
    default_lscv_grid,
    lscv_select,
    politis_select,
    sj_select,
)

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "parse_config",
    "run_experiment",
    "write_csv",
    "main",
    "entrypoint",
]

CSV_HEADER = "n,method,mean_ise_x1000,sd_ise_x1000,reps,seed,fallback_count"
_SELECTORS = ("cv", "sj", "politis")
_DEFAULTS = {
    "density": "fvp",
    "kernel": "trapezoidal",
    "selectors": ("cv", "sj", "politis"),
    "sizes": (100, 400, 1600),
    "reps": 100,
    "seed": 42,
    "out": "results.csv",
    "ise_scale": 1000.0,
}


@dataclass(frozen=True)
class ExperimentConfig:
    density: str
    kernel: str
    selectors: tuple[str, ...]
    sizes: tuple[int, ...]
    reps: int
    seed: int
    out_path: str
    ise_scale: float = 1000.0

    def __post_init__(self):
        if not self.selectors:
            raise ConfigError("selectors: need at least one selector")
        for s in self.selectors:
            if s not in _SELECTORS:
                raise ConfigError(f"selectors: unknown selector {s!r}")
        if len(set(self.selectors)) != len(self.selectors):
            raise ConfigError("selectors: duplicates not allowed")
        if not self.sizes:
            raise ConfigError("sizes: need at least one sample size")
        for n in self.sizes:
            if not (1 <= n < 2 ** 31):
                raise ConfigError(f"sizes: invalid sample size {n}")
        if not (1 <= self.reps < 2 ** 31):
            raise ConfigError(f"reps: must be >= 1, got {self.reps}")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError(f"seed: must be an unsigned 64-bit value, got {self.seed}")
        if not self.ise_scale > 0:
            raise ConfigError(f"ise_scale: must be positive, got {self.ise_scale}")


@dataclass(frozen=True)
class ResultRow:
    n: int
    method: str
    mean_ise_scaled: float
    sd_ise_scaled: float
    reps: int
    seed: int
    fallback_count: int


def _parse_int(key: str, raw) -> int:
    try:
        return int(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_list(raw) -> list[str]:
    return [part.strip() for part in str(raw).split(",") if part.strip()]


def parse_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Assemble a config from defaults, an optional file, then flag overrides.

    File format: flat ``key = value`` lines, ``#`` comments, lists comma
    separated. Unknown keys are rejected with the offending key named.
    """
    values = dict(_DEFAULTS)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path!r}: {exc}") from None
        for lineno, line in enumerate(lines, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"config line {lineno}: expected key = value")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in values:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
            values[key] = raw
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in values:
            raise ConfigError(f"unknown option {key!r}")
        values[key] = raw

    selectors = values["selectors"]
    if isinstance(selectors, str):
        selectors = tuple(_parse_list(selectors))
    sizes = values["sizes"]
    if isinstance(sizes, str):
        sizes = tuple(_parse_int("sizes", v) for v in _parse_list(sizes))
    else:
        sizes = tuple(int(v) for v in sizes)
    try:
        ise_scale = float(values["ise_scale"])
    except ValueError:
        raise ConfigError(f"ise_scale: expected a number, got {values['ise_scale']!r}") from None
    cfg = ExperimentConfig(
        density=str(values["density"]).strip().lower(),
        kernel=str(values["kernel"]).strip().lower(),
        selectors=tuple(selectors),
        sizes=sizes,
        reps=_parse_int("reps", values["reps"]),
        seed=_parse_int("seed", values["seed"]),
        out_path=str(values["out"]),
        ise_scale=ise_scale,
    )
    get_density(cfg.density)
    get_kernel(cfg.kernel)
    return cfg


def _stream_for(seed: int, n: int, rep: int) -> RngStream:
    return RngStream(seed=seed, stream_id=(n << 32) | rep)


def _run_rep(cfg: ExperimentConfig, n: int, rep: int) -> dict:
    """One replication: one sample, every selector, exact ISE each."""
    density = get_density(cfg.density)
    kernel = get_kernel(cfg.kernel)
    smp = sample(density, n, _stream_for(cfg.seed, n, rep))
    politis_floor = 1.0 / PolitisSettings().d_max
    out: dict = {"_hash": hashlib.sha256(smp.points.tobytes()).hexdigest()[:16]}
    for sel in cfg.selectors:
        fallback = 0
        try:
            if sel == "politis":
                try:
                    h = politis_select(smp).h
                except NoFlatRegion:
                    h = politis_floor
                    fallback = 1
                smooth_kernel = kernel
            elif sel == "cv":
                grid = default_lscv_grid(smp, kernel, density)
                h = lscv_select(smp, kernel, grid).h
                smooth_kernel = kernel
            else:  # sj
                h = sj_select(smp).h
                smooth_kernel = get_kernel("gaussian")
            ise = ise_exact(smooth_kernel, h, smp, density)
            out[sel] = (ise, fallback)
        except SuperkdeError as exc:
            out[sel] = (None, 0)
            out.setdefault("_errors", []).append(f"{sel}: {exc}")
    return out


def _run_rep_packed(args) -> tuple[int, int, dict]:
    cfg, n, rep = args
    return n, rep, _run_rep(cfg, n, rep)


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    verbose: bool = False,
) -> list[ResultRow]:
    """Execute the full protocol and aggregate one row per (n, method).

    Replications are independent tasks keyed by (n, rep); aggregation is in
    rep order, so any worker count yields identical rows.
    """
    tasks = [(config, n, rep) for n in config.sizes for rep in range(config.reps)]
    results: dict[tuple[int, int], dict] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for n, rep, res in pool.map(_run_rep_packed, tasks, chunksize=4):
                results[(n, rep)] = res
    else:
        for t in tasks:
            n, rep, res = _run_rep_packed(t)
            results[(n, rep)] = res

    if verbose:
        print(f"# prng = {PRNG_ALGORITHM}", file=sys.stderr)
        for (n, rep) in sorted(results):
            res = results[(n, rep)]
            print(f"# n={n} rep={rep} sample_hash={res['_hash']}", file=sys.stderr)
            for msg in res.get("_errors", []):
                print(f"# n={n} rep={rep} selector_error {msg}", file=sys.stderr)

    rows: list[ResultRow] = []
    for n in sorted(set(config.sizes)):
        for sel in config.selectors:
            values = []
            fallbacks = 0
            for rep in range(config.reps):
                ise, fb = results[(n, rep)][sel]
                if ise is not None:
                    values.append(config.ise_scale * ise)
                    fallbacks += fb
            count = len(values)
            arr = np.asarray(values)
            mean = float(arr.mean()) if count else math.nan
            sd = float(arr.std(ddof=1)) if count > 1 else 0.0
            rows.append(ResultRow(
                n=n, method=sel, mean_ise_scaled=mean, sd_ise_scaled=sd,
                reps=count, seed=config.seed, fallback_count=fallbacks,
            ))
    return rows


def write_csv(rows: list[ResultRow], path: str) -> None:
    """Write rows in the fixed schema; reals carry 6 significant digits."""
    if not rows:
        raise ValueError("no rows to write")
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.n},{r.method},{r.mean_ise_scaled:.6g},{r.sd_ise_scaled:.6g},"
            f"{r.reps},{r.seed},{r.fallback_count}"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_sim(args: argparse.Namespace) -> int:
    overrides = {
        "density": args.density,
        "kernel": args.kernel,
        "selectors": args.selectors,
        "sizes": args.sizes,
        "reps": args.reps,
        "seed": args.seed,
        "out": args.out,
    }
    config = parse_config(args.config, overrides)
    rows = run_experiment(config, workers=max(1, args.workers), verbose=args.verbose)
    write_csv(rows, config.out_path)
    print(f"wrote {config.out_path} ({len(rows)} rows)")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    kernel = get_kernel(args.kernel)
    c = classify(kernel)
    print(f"kernel = {kernel.name}")
    print(f"s_k = {c.s_k:.12g}")
    print(f"t_k = {c.t_k:.12g}")
    print(f"order = {c.order_label}")
    print(f"moments = [{', '.join(f'{m:.6g}' for m in c.moments)}]")
    print(f"roughness = {c.roughness:.12g}")
    print(f"superkernel = {c.is_superkernel}")
    if kernel.integrable:
        print(f"admissible = {check_admissible(kernel)}")
    else:
        print("admissible = n/a (not integrable)")
    return 0


def _cmd_mise(args: argparse.Namespace) -> int:
    kernel = get_kernel(args.kernel)
    density = get_density(args.density)
    if args.n < 1:
        raise ConfigError(f"n: must be >= 1, got {args.n}")
    if not args.h > 0:
        raise ConfigError(f"h: must be positive, got {args.h}")
    report = mise_exact(kernel, density, args.n, args.h)
    print(f"kernel = {kernel.name}")
    print(f"density = {density.name}")
    print(f"n = {report.n}")
    print(f"h = {report.h:.12g}")
    print(f"bias_term = {report.bias_term:.12e}")
    print(f"variance_term = {report.variance_term:.12e}")
    print(f"mise = {report.mise:.12e}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="superkde",
        description="Superkernel density estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("sim", help="run the Monte Carlo experiment")
    p_sim.add_argument("--config", default=None, help="key = value config file")
    p_sim.add_argument("--density", default=None)
    p_sim.add_argument("--kernel", default=None)
    p_sim.add_argument("--selectors", default=None, help="comma list of cv,sj,politis")
    p_sim.add_argument("--sizes", default=None, help="comma list of sample sizes")
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--verbose", action="store_true")
    p_sim.set_defaults(func=_cmd_sim)

    p_cls = sub.add_parser("classify", help="print kernel classification")
    p_cls.add_argument("--kernel", required=True)
    p_cls.set_defaults(func=_cmd_classify)

    p_mise = sub.add_parser("mise", help="print the exact risk report")
    p_mise.add_argument("--kernel", required=True)
    p_mise.add_argument("--density", required=True)
    p_mise.add_argument("--n", type=int, required=True)
    p_mise.add_argument("--h", type=float, required=True)
    p_mise.set_defaults(func=_cmd_mise)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SuperkdeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
