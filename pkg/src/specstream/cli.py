"""Command-line entry point orchestrating the analysis pipelines.

Subcommands: simulate (synthetic streams), lawcheck (moving-window
ring/support anomaly scan), ustat (pooled covariance-change test),
freeprob (polynomial spectra, algorithm vs Monte Carlo), spectrum
(ensemble or stream ESD against its limit law). Exit codes are a stable
scripting contract: 0 clean or H0, 2 anomaly or H1, 1 error. Every
randomized command takes --seed (default from SPECSTREAM_SEED, else 0);
there is no hidden entropy.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from .covtest import WindowedStream, pooled_statistic
from .ensembles import EnsembleSpec, sample
from .freeprob import (ks_distance, monte_carlo_spectrum,
                       pencil_anticommutator,
                       pencil_anticommutator_plus_square,
                       polynomial_spectrum)
from .gridsim import (EventScript, ieee118_default_script,
                      ieee118_fusion_script, noisy_loads,
                      random_response_matrix, simulate_voltage)
from .laws import LawSpec, law_cdf, law_density, esd_from_spectrum, \
    convergence_gap
from .linalg import DataMatrix, SpectrumSample, eig_hermitian
from .pipeline import (AnalysisWindow, LES_BUILTINS, les, mp_bound_check,
                       msr_from_ring, ring_law_check, window_stream)
from .streamio import (StreamData, read_stream, write_curves,
                       write_indicator_series, write_report_json,
                       write_stream)

__all__ = ["main", "RunConfig"]

PENCILS = {
    "anticommutator": pencil_anticommutator,
    "anticommutator-plus-square": pencil_anticommutator_plus_square,
}

SIM_PRESETS = ("ieee118", "fusion", "noise")

#: fraction of flagged windows above which lawcheck exits anomalous
LAWCHECK_FLAG_BUDGET = 0.01


@dataclass(frozen=True)
class RunConfig:
    """Validated knob set shared by the stream-analysis commands."""

    seed: int = 0
    window_t: int = 240
    stride: int = 1
    q: int = 5
    n_g: int = 50
    alpha: float = 0.05
    grid_points: int = 400
    epsilon: float = 1e-3
    indicator: str | None = None

    def __post_init__(self):
        if self.window_t < 2:
            raise ValueError("--window must be at least 2")
        if self.stride < 1:
            raise ValueError("--stride must be positive")
        if self.q < 2:
            raise ValueError("--q must be at least 2")
        if self.n_g < 4:
            raise ValueError("--ng must be at least 4")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("--alpha must lie in (0, 1)")
        if self.grid_points < 10:
            raise ValueError("--grid-points must be at least 10")
        if self.epsilon <= 0:
            raise ValueError("--epsilon must be positive")
        if self.indicator is not None and self.indicator not in LES_BUILTINS:
            raise ValueError(
                f"--indicator must be one of {', '.join(LES_BUILTINS)}")


def _default_seed() -> int:
    raw = os.environ.get("SPECSTREAM_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"SPECSTREAM_SEED must be an integer, got {raw!r}")


def _out_base(path: str | None, fallback: str) -> str:
    base = path if path else fallback
    root, ext = os.path.splitext(base)
    return root if ext in (".csv", ".json") else base


def cmd_simulate(args) -> int:
    cfg = RunConfig(seed=args.seed)
    if args.preset == "ieee118":
        script = ieee118_default_script()
    elif args.preset == "fusion":
        script = ieee118_fusion_script()
    elif args.preset == "noise":
        script = EventScript(n_nodes=118, t_total=2500)
    else:
        raise ValueError(f"unknown preset {args.preset!r}")
    model = random_response_matrix(script.n_nodes, seed=cfg.seed)
    loads = noisy_loads(script, seed=cfg.seed)
    volts = simulate_voltage(model, loads, base_loads=script.base_loads)
    t = np.arange(1, script.t_total + 1, dtype=float)
    names = tuple(f"sensor_{i + 1}" for i in range(script.n_nodes))
    meta = {
        "sampling_hz": 1.0,
        "units": "voltage-deviation",
        "source": f"specstream simulate --preset {args.preset} "
                  f"--seed {cfg.seed}",
    }
    out = args.output or f"{args.preset}-stream.csv"
    write_stream(out, StreamData(t=t, values=volts, names=names, meta=meta))
    print(f"wrote {out}: {script.n_nodes} sensors x {script.t_total} samples")
    return 0


def cmd_lawcheck(args) -> int:
    cfg = RunConfig(seed=args.seed, window_t=args.window, stride=args.stride,
                    indicator=args.indicator)
    stream = read_stream(args.input)
    windows = window_stream(stream.values, cfg.window_t, stride=cfg.stride,
                            t_values=stream.t)
    rows = []
    flags = []
    first_flag = None
    for w in windows:
        rc = ring_law_check(w, seed=cfg.seed)
        mp = mp_bound_check(w)
        ms = msr_from_ring(rc)
        flagged = rc.flagged or mp.flagged
        flags.append(flagged)
        if flagged and first_flag is None:
            first_flag = w.t_end
        rows.append((w.t_end, "ring-fraction", rc.fraction_inside,
                     rc.fraction_inside, rc.flagged))
        rows.append((w.t_end, "mp-fraction", mp.fraction_inside,
                     mp.fraction_inside, mp.flagged))
        rows.append((w.t_end, "MSR", ms.value, ms.ratio, flagged))
        if cfg.indicator:
            ind = les(w, cfg.indicator)
            rows.append((w.t_end, ind.name, ind.value, ind.ratio, False))
    base = _out_base(args.output, "lawcheck")
    write_indicator_series(base + ".csv", rows)
    flagged_fraction = float(np.mean(flags)) if flags else 0.0
    report = {
        "input": args.input,
        "windows": len(windows),
        "window_t": cfg.window_t,
        "stride": cfg.stride,
        "seed": cfg.seed,
        "flagged": int(np.sum(flags)),
        "flagged_fraction": flagged_fraction,
        "first_flag_t_end": first_flag,
    }
    write_report_json(base + ".json", report)
    anomalous = flagged_fraction > LAWCHECK_FLAG_BUDGET
    first = "none" if first_flag is None else f"{first_flag:g}"
    print(f"{len(windows)} windows, {report['flagged']} flagged "
          f"({flagged_fraction:.3%}); first flag at {first}")
    return 2 if anomalous else 0


def cmd_ustat(args) -> int:
    cfg = RunConfig(seed=args.seed, q=args.q, n_g=args.ng, alpha=args.alpha)
    stream = read_stream(args.input)
    need = cfg.q * cfg.n_g
    if stream.sample_count < need:
        raise ValueError(
            f"stream has {stream.sample_count} samples, needs q*ng={need}")
    tail = stream.values[:, -need:]
    windows = []
    for i in range(cfg.q):
        w = tail[:, i * cfg.n_g:(i + 1) * cfg.n_g]
        windows.append(w - w.mean(axis=1, keepdims=True))
    report = pooled_statistic(WindowedStream(tuple(windows)),
                              alpha=cfg.alpha, seed=cfg.seed)
    payload = {
        "input": args.input,
        "q": cfg.q,
        "n_g": cfg.n_g,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "statistic": report.statistic,
        "sigma": report.sigma,
        "ratio": report.ratio,
        "threshold": report.threshold,
        "decision": report.decision,
        "excluded_windows": list(report.excluded),
        "notes": list(report.notes),
    }
    if args.output:
        write_report_json(args.output, payload)
    print(f"V1 = {report.statistic:.6g}, ratio = {report.ratio:.3f}, "
          f"threshold = {report.threshold:.3f} -> {report.decision}")
    return 2 if report.decision == "H1" else 0


def _parse_law(token: str) -> LawSpec:
    token = token.strip()
    if token == "semicircle":
        return LawSpec("semicircle")
    for prefix in ("mp:", "marchenko-pastur:"):
        if token.startswith(prefix):
            return LawSpec("marchenko-pastur", c=float(token[len(prefix):]))
    raise ValueError(
        f"law {token!r} not recognized; use 'semicircle' or 'mp:<c>'")


def cmd_freeprob(args) -> int:
    cfg = RunConfig(seed=args.seed, grid_points=args.grid_points,
                    epsilon=args.epsilon)
    if args.polynomial not in PENCILS:
        raise ValueError(
            f"--polynomial must be one of {', '.join(sorted(PENCILS))}")
    pencil = PENCILS[args.polynomial]()
    laws = tuple(_parse_law(tok) for tok in args.laws.split(","))
    mc = monte_carlo_spectrum(pencil, laws, n=args.n, draws=args.draws,
                              seed=cfg.seed)
    lo, hi = mc.support
    grid = np.linspace(lo - 1.0, hi + 1.0, cfg.grid_points)
    result = polynomial_spectrum(pencil, laws, grid=grid, eta=cfg.epsilon,
                                 seed=cfg.seed)
    hist, edges = np.histogram(mc.values, bins=80, range=(grid[0], grid[-1]),
                               density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    density_mc = np.interp(grid, centers, hist)
    out = args.output or f"freeprob-{args.polynomial}.csv"
    write_curves(out, {"x": grid, "density_algorithm": result.density,
                       "density_mc": density_mc})
    ks = ks_distance(result, mc.values)
    print(f"KS(algorithm vs MC) = {ks:.4f}; spectral mass = "
          f"{result.mass:.4f}; wrote {out}")
    if result.flagged:
        print(f"{len(result.flagged)} grid points interpolated after "
              f"non-convergence", file=sys.stderr)
    return 0


def cmd_spectrum(args) -> int:
    cfg = RunConfig(seed=args.seed, window_t=args.window)
    if args.input:
        stream = read_stream(args.input)
        if stream.sample_count < cfg.window_t:
            raise ValueError("stream shorter than one analysis window")
        w = AnalysisWindow(
            matrix=DataMatrix(stream.values[:, -cfg.window_t:]),
            t_end=float(stream.t[-1]))
        check = mp_bound_check(w)
        spec = SpectrumSample(check.eigenvalues,
                              (w.n, cfg.window_t), "eigen-hermitian")
        law = LawSpec("marchenko-pastur", c=w.c)
        label = f"stream window c={w.c:.4f}"
    elif args.ensemble == "gue":
        m = sample(EnsembleSpec("gue", args.n, sigma=args.sigma,
                                seed=cfg.seed))
        vals = eig_hermitian(m.entries).values / np.sqrt(args.n)
        spec = SpectrumSample(vals, (args.n, args.n), "eigen-hermitian")
        law = LawSpec("semicircle", sigma=args.sigma)
        label = f"gue n={args.n}"
    elif args.ensemble == "lue":
        if not args.t:
            raise ValueError("--t is required for the lue ensemble")
        m = sample(EnsembleSpec("lue", args.n, t=args.t, sigma=args.sigma,
                                seed=cfg.seed))
        spec = eig_hermitian(m.entries)
        law = LawSpec("marchenko-pastur", c=args.n / args.t,
                      sigma=args.sigma)
        label = f"lue p={args.n} t={args.t}"
    else:
        raise ValueError("need --input or --ensemble {gue,lue}")
    esd = esd_from_spectrum(spec)
    gap = convergence_gap(esd, law)
    out = args.output or "spectrum.csv"
    write_curves(out, {
        "x": esd.grid,
        "esd_cdf": esd.cdf,
        "law_cdf": law_cdf(law, esd.grid),
        "law_density": law_density(law, esd.grid),
    })
    print(f"{label}: sup CDF gap vs {law.kind} = {gap:.5f}; wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specstream",
        description="Random-matrix analytics for spatio-temporal "
                    "measurement streams.")
    sub = parser.add_subparsers(dest="command", required=True)
    seed_default = _default_seed()

    p = sub.add_parser("simulate", help="generate a synthetic stream CSV")
    p.add_argument("--preset", choices=SIM_PRESETS, default="ieee118")
    p.add_argument("--output", default=None)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lawcheck",
                       help="moving-window ring/support anomaly scan")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None,
                   help="output base path (writes .csv and .json)")
    p.add_argument("--window", type=int, default=240)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--indicator", choices=LES_BUILTINS, default=None,
                   help="extra LES indicator column")
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_lawcheck)

    p = sub.add_parser("ustat", help="pooled covariance-change test")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None, help="JSON report path")
    p.add_argument("--q", type=int, default=5, help="number of windows")
    p.add_argument("--ng", type=int, default=50, help="samples per window")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_ustat)

    p = sub.add_parser("freeprob",
                       help="polynomial spectrum, algorithm vs Monte Carlo")
    p.add_argument("--polynomial", default="anticommutator",
                   choices=sorted(PENCILS))
    p.add_argument("--laws", default="semicircle,semicircle",
                   help="comma list, e.g. semicircle,mp:0.5")
    p.add_argument("--n", type=int, default=1000,
                   help="matrix size per Monte Carlo draw")
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--grid-points", type=int, default=400)
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="spectral smoothing height")
    p.add_argument("--output", default=None)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_freeprob)

    p = sub.add_parser("spectrum", help="ESD against its limit law")
    p.add_argument("--input", default=None, help="stream CSV to analyze")
    p.add_argument("--ensemble", choices=("gue", "lue"), default=None)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--window", type=int, default=240)
    p.add_argument("--output", default=None)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_spectrum)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
