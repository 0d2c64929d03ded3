"""Command-line front end: ``ccsr {analyze,optimize,simulate,reproduce}``.

E_b/N_0 convention: symbols have unit energy and the channel unit variance,
so ``E_s = rate * log2(M) * E_b`` and the simulated noise density is
``N0 = 1 / (rate * log2(M) * 10**(snr/10))``.  The analytical bounds use the
same E_b/N_0.

Exit codes: 0 success, 2 usage error, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ber_analytic, eta_analytic
from .config import ConfigError, ProtocolConfig, load_config
from .optimizer import (DEFAULT_GRID, TauTable, build_table, emit_table, load_table, resolve_tau,
                        tau_grid)
from .sim import SweepSpec, default_workers, results_to_csv, run_sweep, tune_table_mc

log = logging.getLogger("ccsr")

CONVENTION = ("E_b/N_0 in dB with unit-energy symbols and a unit-variance channel: "
              "E_s = rate*log2(M)*E_b, so N0 = 1/(rate*log2(M)*10^(snr/10)).")
ANALYZE_HEADER = ("snr_db", "mu", "tau", "ber_a", "eta_a")
FIGURES = ("fig4", "fig5", "fig6", "fig7", "fig8")
MC_TAU_GRID = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[float]:
    """``start:step:stop`` (inclusive), a comma list, or a single value; empty when stop < start."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step < 0:
                raise ValueError
            if stop < start:
                return []
            return [float(v) for v in tau_grid(start, stop, step)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected start:step:stop or a comma list") from None


def parse_ints(text: str) -> list[int]:
    try:
        vals = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None
    if not vals or min(vals) < 1:
        raise UsageError("mu values must be positive integers")
    return vals


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    return "\n".join(lines) + "\n"


def _base_config(args) -> ProtocolConfig:
    over = {"seed": args.seed}
    if getattr(args, "channel_mode", None):
        over["channel_mode"] = args.channel_mode
    try:
        if args.config:
            return load_config(args.config, **over)
        return ProtocolConfig(**{k: v for k, v in over.items() if v is not None})
    except (ConfigError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _tau_policy(args, required: bool):
    if args.tau is not None and args.tau_table:
        raise UsageError("--tau and --tau-table are mutually exclusive")
    if args.tau_table:
        try:
            return load_table(args.tau_table)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read tau table: {exc}") from None
    if args.tau is not None:
        if args.tau < 0:
            raise UsageError("--tau must be non-negative")
        return args.tau
    if required:
        raise UsageError("scheme ccsr needs a threshold: pass --tau or --tau-table")
    return 0.0


# -- subcommands ---------------------------------------------------------------

def analyze_rows(snrs, mu: int, policy, frame_bits: int, mod):
    rows = []
    for snr in snrs:
        tau = resolve_tau(policy, snr, mu)
        rows.append((snr, mu, tau, float(ber_analytic(snr, tau, mu, mod)),
                     float(eta_analytic(snr, tau, mu, frame_bits, mod))))
    return rows


def cmd_analyze(args) -> int:
    base = _base_config(args)
    policy = _tau_policy(args, required=False)
    if args.frame_bits < 1:
        raise UsageError("--frame-bits must be >= 1")
    try:
        rows = analyze_rows(parse_range(args.snr_range), args.mu, policy, args.frame_bits, base.mod)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    path = _write(args.out, "analyze.csv", _csv_text(ANALYZE_HEADER, rows))
    log.info("wrote %s", path)
    return 0


def cmd_optimize(args) -> int:
    base = _base_config(args)
    g = parse_range(args.grid)
    if not g:
        raise UsageError("--grid must be start:step:stop with stop >= start, or a comma list")
    tt = build_table(parse_range(args.snr_range), parse_ints(args.mu_list), base.mod, args.frame_bits, g)
    tt.check_trend()
    path = _write(args.out, "tau_table.csv", emit_table(tt))
    log.info("wrote %s", path)
    return 0


def _spec(base: ProtocolConfig, **kw) -> SweepSpec:
    fec = kw.pop("fec", base.fec_enabled)
    ns = base.n_subcarriers if not fec or base.n_subcarriers * base.mod.bits_per_symbol == 648 else None
    return SweepSpec(fec=fec, base_seed=base.seed, channel_mode=base.channel_mode, n_subcarriers=ns,
                     n_taps=base.n_taps, M=base.M, crc_mode=base.crc_mode, **kw)


def cmd_simulate(args) -> int:
    base = _base_config(args)
    policy = _tau_policy(args, required=args.scheme == "ccsr")
    if args.frames < 1:
        raise UsageError("--frames must be >= 1")
    spec = _spec(base, snrs=tuple(parse_range(args.snr_range)), mus=tuple(parse_ints(args.mu)),
                 schemes=(args.scheme,), tau_policy=policy, fec=args.fec == "on", frames=args.frames,
                 min_errors=args.min_errors, max_bits=args.max_bits)
    if isinstance(policy, TauTable):
        for mu in spec.mus:
            for snr in spec.snrs:
                try:
                    policy.lookup(snr, mu)
                except KeyError as exc:
                    raise UsageError(str(exc)) from None
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "sweep.csv"
    run_sweep(spec, workers=args.workers, out=path)
    log.info("wrote %s", path)
    return 0


def _series_csv(rows) -> str:
    return _csv_text(("snr_db", "value", "ci95"), rows)


def reproduce(figure: str, base: ProtocolConfig, out: Path, frames: int, workers: int = 1,
              snrs=None, mus=None, channel_mode=None) -> dict:
    """Run the desk-scale recipe for one figure; returns the manifest written next to the CSVs."""
    out = out / figure
    series = []

    def emit(name, rows, **meta):
        _write(out, f"{name}.csv", _series_csv(rows))
        series.append({"name": name, "file": f"{name}.csv", **meta})

    mod = base.mod
    if channel_mode:
        base = base.replace(channel_mode=channel_mode)
    if figure in ("fig4", "fig5"):
        snrs = snrs or parse_range("0:2:16")
        mus = mus or [1, 2, 4]
        base = base.replace(channel_mode=channel_mode or "iid")  # the bound assumes independent subcarriers
        tt = build_table(snrs, mus, mod)
        _write(out, "tau_table.csv", emit_table(tt))
        spec = _spec(base, snrs=tuple(snrs), mus=tuple(mus), schemes=("ccsr",),
                     tau_policy=tt, fec=False, frames=frames)
        res = run_sweep(spec, workers=workers)
        _write(out, "sweep.csv", results_to_csv(res))
        for mu in mus:
            sim = [r for r in res if r.mu == mu]
            if figure == "fig4":
                emit(f"ber_a_mu{mu}", [(s, float(ber_analytic(s, tt.lookup(s, mu), mu, mod)), 0.0) for s in snrs],
                     mu=mu, kind="analytic", scheme="ccsr")
                emit(f"ber_m_mu{mu}", [(r.snr_db, r.ber, r.ber_ci95) for r in sim], mu=mu, kind="monte_carlo",
                     scheme="ccsr")
            else:
                emit(f"eta_a_mu{mu}", [(s, float(eta_analytic(s, tt.lookup(s, mu), mu, 1024, mod)), 0.0)
                                       for s in snrs], mu=mu, kind="analytic", scheme="ccsr")
                emit(f"eta_m_mu{mu}", [(r.snr_db, r.eta, r.eta_ci95) for r in sim], mu=mu, kind="monte_carlo",
                     scheme="ccsr")
        y = "BER" if figure == "fig4" else "throughput"
    elif figure == "fig6":
        snrs = snrs or parse_range("0:2:20")
        mus = mus or [1, 2, 3, 4]
        tt = build_table(snrs, mus, mod)
        _write(out, "tau_table.csv", emit_table(tt))
        cc_mus = tuple(m for m in (2, 4) if m in mus) or tuple(mus)
        res = run_sweep(_spec(base, snrs=tuple(snrs), mus=cc_mus, schemes=("cc",), fec=False, frames=frames),
                        workers=workers)
        res += run_sweep(_spec(base, snrs=tuple(snrs), mus=tuple(mus), schemes=("ccsr",), tau_policy=tt,
                               fec=False, frames=frames), workers=workers)
        _write(out, "sweep.csv", results_to_csv(res))
        for r0 in res:
            name = f"eta_m_{r0.scheme}_mu{r0.mu}"
            if any(s["name"] == name for s in series):
                continue
            emit(name, [(r.snr_db, r.eta, r.eta_ci95) for r in res if r.scheme == r0.scheme and r.mu == r0.mu],
                 mu=r0.mu, kind="monte_carlo", scheme=r0.scheme)
        y = "throughput"
    elif figure in ("fig7", "fig8"):
        snrs = snrs or parse_range("-8:2:8")
        mus = mus or ([1, 2, 4] if figure == "fig7" else [1])
        tune_spec = _spec(base.replace(seed=base.seed + 1), snrs=tuple(snrs), mus=tuple(mus), fec=True,
                          frames=max(1, frames // 4))
        tt = tune_table_mc(tune_spec, MC_TAU_GRID, frames=max(1, frames // 4), workers=workers)
        _write(out, "tau_table.csv", emit_table(tt))
        spec = _spec(base, snrs=tuple(snrs), mus=tuple(mus), schemes=("cc", "ccsr"), tau_policy=tt, fec=True,
                     frames=frames)
        res = run_sweep(spec, workers=workers)
        _write(out, "sweep.csv", results_to_csv(res))
        for sc in ("cc", "ccsr"):
            for mu in mus:
                sub = [r for r in res if r.scheme == sc and r.mu == mu]
                if figure == "fig7":
                    emit(f"ber_m_{sc}_harq_mu{mu}", [(r.snr_db, r.ber, r.ber_ci95) for r in sub], mu=mu,
                         kind="monte_carlo", scheme=sc + "-harq")
                else:
                    emit(f"eta_m_{sc}_harq_mu{mu}", [(r.snr_db, r.eta, r.eta_ci95) for r in sub], mu=mu,
                         kind="monte_carlo", scheme=sc + "-harq")
        y = "BER" if figure == "fig7" else "throughput"
    else:
        raise UsageError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    manifest = {"figure": figure, "x": {"name": "snr_db", "label": "E_b/N_0 (dB)"},
                "y": {"name": "value", "label": y, "log": y == "BER"},
                "frames_per_point": frames, "seed": base.seed, "channel_mode": base.channel_mode,
                "convention": CONVENTION, "series": series}
    _write(out, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def cmd_reproduce(args) -> int:
    base = _base_config(args)
    if args.frames < 1:
        raise UsageError("--frames must be >= 1")
    snrs = parse_range(args.snr_range) if args.snr_range else None
    mus = parse_ints(args.mu_list) if args.mu_list else None
    reproduce(args.figure, base, args.out, args.frames, args.workers, snrs, mus, args.channel_mode)
    log.info("wrote %s", args.out / args.figure)
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="key = value file with ProtocolConfig fields")
    shared.add_argument("--out", type=Path, default=Path("out"), help="output directory (created if absent)")
    shared.add_argument("--seed", type=int, default=None, help="base seed (overrides the config file)")
    shared.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $CCSR_WORKERS or 1)")
    shared.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ccsr", description="Chase combining with selective retransmission.",
                                epilog=CONVENTION)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[shared], help="BER and throughput bounds", epilog=CONVENTION)
    a.add_argument("--snr-range", default="0:2:20", help="start:step:stop in dB")
    a.add_argument("--mu", type=int, default=1)
    a.add_argument("--tau", type=float)
    a.add_argument("--tau-table")
    a.add_argument("--frame-bits", type=int, default=1024)
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("optimize", parents=[shared], help="throughput-optimal threshold table", epilog=CONVENTION)
    o.add_argument("--snr-range", default="0:2:20")
    o.add_argument("--mu-list", default="1,2,3,4")
    o.add_argument("--grid", default="{}:{}:{}".format(DEFAULT_GRID[0], DEFAULT_GRID[2], DEFAULT_GRID[1]),
                   help="tau grid start:step:stop")
    o.add_argument("--frame-bits", type=int, default=1024)
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("simulate", parents=[shared], help="Monte Carlo sweep", epilog=CONVENTION)
    s.add_argument("--scheme", choices=("cc", "ccsr"), default="ccsr")
    s.add_argument("--mu", default="1", help="one value or a comma list")
    s.add_argument("--snr-range", default="0:2:20")
    s.add_argument("--tau", type=float)
    s.add_argument("--tau-table")
    s.add_argument("--fec", choices=("on", "off"), default="off")
    s.add_argument("--frames", type=int, default=10_000)
    s.add_argument("--channel-mode", choices=("taps", "iid"))
    s.add_argument("--min-errors", type=int, default=0,
                   help="extend a point until this many bit errors (0 disables)")
    s.add_argument("--max-bits", type=float, default=1e8, help="cap on measured bits per point when extending")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", parents=[shared], help="desk-scale figure recipes", epilog=CONVENTION)
    r.add_argument("--figure", required=True, help=", ".join(FIGURES))
    r.add_argument("--frames", type=int, default=1000)
    r.add_argument("--snr-range")
    r.add_argument("--mu-list")
    r.add_argument("--channel-mode", choices=("taps", "iid"))
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers is None:
        args.workers = default_workers()
    try:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        if getattr(args, "figure", None) is not None and args.figure not in FIGURES:
            raise UsageError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ccsr: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("ccsr: interrupted", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        log.debug("failure", exc_info=True)
        print(f"ccsr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
