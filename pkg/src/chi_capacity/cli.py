"""Command-line entry point ``chi-capacity``.

Every command writes CSV (or JSON with ``--format json``) preceded by a
``#``-prefixed metadata block holding the package version, the command line
and the fully resolved parameters.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__, entropy, fiberlink, inputs, mi, nft, solitonsim
from .channel import ChannelSpec
from .errors import ConvergenceError, DomainError
from .fiberlink import FiberSystem
from .inputs import InputSpec

CLI_INPUTS = ("rayleigh", "geometric", "half-gaussian", "maxwell-boltzmann", "truncated-rayleigh")

_FIBER_KEYS = {f.name: f.type for f in fields(FiberSystem)}
_CAMPAIGN_KEYS = {
    "power_dbm": float, "symbol_rate_gbd": float, "sample_period_ps": float, "step_km": float,
    "runs": int, "slots": int, "guard": float, "seed": int, "oversample": int,
    "reference_step_km": float, "x_hat": float,
}


class CliError(Exception):
    pass


# --------------------------------------------------------------------------- parsing helpers

def parse_range(text: str) -> list[float]:
    """``from:to:step`` (inclusive) or a single value."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
    if len(vals) == 1:
        return vals
    if len(vals) != 3 or vals[2] <= 0 or vals[1] < vals[0]:
        raise argparse.ArgumentTypeError(f"range must be from:to:step with step > 0, got {text!r}")
    count = int(math.floor((vals[1] - vals[0]) / vals[2] + 1e-9)) + 1
    return [round(vals[0] + k * vals[2], 12) for k in range(count)]


def parse_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise CliError(f"{path}:{lineno}: expected key = value")
        if key in _FIBER_KEYS:
            out[key] = value.lower() in ("1", "true", "yes") if key == "dual_pol" else float(value)
        elif key in _CAMPAIGN_KEYS:
            out[key] = _CAMPAIGN_KEYS[key](value)
        else:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def format_config(cfg: nft.CampaignConfig) -> str:
    lines = [f"{k} = {v}" for k, v in cfg.fiber.to_dict().items()]
    for k in _CAMPAIGN_KEYS:
        v = getattr(cfg, k)
        if v is not None:
            lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def snr_to_rho(db: float) -> float:
    return 10.0 ** (db / 10.0)


# --------------------------------------------------------------------------- output

def _metadata(args, params: dict) -> dict:
    return {
        "chi_capacity_version": __version__,
        "command": args.command,
        "argv": " ".join(args.argv),
        "seed": getattr(args, "seed", None),
        "params": json.dumps(params, sort_keys=True, default=str),
    }


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def emit(rows: list[dict], columns: list[str], meta: dict, fmt: str, out=None) -> None:
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        if fmt == "json":
            json.dump({"metadata": meta, "rows": rows}, fh, indent=2, default=str)
            fh.write("\n")
        else:
            for k, v in meta.items():
                fh.write(f"# {k}: {v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(r.get(c)) for c in columns])
    finally:
        if out:
            fh.close()


# --------------------------------------------------------------------------- commands

def cmd_mi_curve(args) -> int:
    spec = ChannelSpec(args.n, args.sigma_n_sq)
    rows = []
    for db in args.snr_db:
        rho = snr_to_rho(db)
        s2 = rho * args.sigma_n_sq
        inp = InputSpec(args.input, s2, x_hat=args.x_hat if args.input == "truncated-rayleigh" else 0.0)
        if args.method == "mc":
            est = mi.mi_monte_carlo(spec, inp, args.samples, args.seed)
        else:
            est = mi.mi_quadrature(spec, inp, args.tol)
        row = {"snr_db": db, "rho": rho, "n": args.n, "input": args.input,
               "mi_bits": est.value_bits, "stderr_bits": est.std_error_bits, "method": est.method}
        if args.with_asymptote:
            row["mi_asymptote_bits"] = entropy.mi_asymptote(rho)
        rows.append(row)
    cols = ["snr_db", "rho", "n", "input", "mi_bits", "stderr_bits", "method"]
    if args.with_asymptote:
        cols.append("mi_asymptote_bits")
    params = {"n": args.n, "input": args.input, "snr_db": args.snr_db, "method": args.method,
              "samples": args.samples, "tol": args.tol, "sigma_n_sq": args.sigma_n_sq, "x_hat": args.x_hat}
    emit(rows, cols, _metadata(args, params), args.format, args.out)
    return 0


def cmd_ask(args) -> int:
    spec = ChannelSpec(args.n, args.sigma_n_sq)
    rows = []
    for db in args.snr_db:
        rho = snr_to_rho(db)
        est = mi.mi_ask(spec, args.m, rho * args.sigma_n_sq, args.tol)
        rows.append({"snr_db": db, "rho": rho, "n": args.n, "m": args.m,
                     "mi_bits": est.value_bits, "method": est.method})
    params = {"n": args.n, "m": args.m, "snr_db": args.snr_db, "tol": args.tol, "sigma_n_sq": args.sigma_n_sq}
    emit(rows, ["snr_db", "rho", "n", "m", "mi_bits", "method"], _metadata(args, params), args.format, args.out)
    return 0


def cmd_cond_entropy(args) -> int:
    rows = []
    for db in args.snr_db:
        rho = snr_to_rho(db)
        rep = entropy.rayleigh_mi(args.n, rho)
        rows.append({"snr_db": db, "rho": rho, "n": args.n,
                     "h_y_given_x_bits": rep.h_y_given_x_bits, "h_y_bits": rep.h_y_bits,
                     "mi_bits": rep.mi_bits, "high_snr_limit_bits": entropy.cond_entropy_limit()})
    cols = ["snr_db", "rho", "n", "h_y_given_x_bits", "h_y_bits", "mi_bits", "high_snr_limit_bits"]
    emit(rows, cols, _metadata(args, {"n": args.n, "snr_db": args.snr_db}), args.format, args.out)
    return 0


def cmd_asymptote(args) -> int:
    rows = []
    for db in args.snr_db:
        rho = snr_to_rho(db)
        rows.append({"snr_db": db, "rho": rho,
                     "output_entropy_bits": entropy.output_entropy_asymptotic(rho),
                     "cond_entropy_bits": entropy.cond_entropy_limit(),
                     "mi_asymptote_bits": entropy.mi_asymptote(rho)})
    cols = ["snr_db", "rho", "output_entropy_bits", "cond_entropy_bits", "mi_asymptote_bits"]
    emit(rows, cols, _metadata(args, {"snr_db": args.snr_db}), args.format, args.out)
    return 0


def cmd_rate_loss(args) -> int:
    spec = ChannelSpec(args.n, args.sigma_n_sq)
    rows = []
    for db in args.snr_db:
        rho = snr_to_rho(db)
        s2 = rho * args.sigma_n_sq
        loss = mi.rate_loss_truncated(spec, s2, args.x_hat, args.tol)
        kl = mi.output_kl_truncated(spec, s2, args.x_hat) if args.x_hat > 0 else 0.0
        rows.append({"snr_db": db, "rho": rho, "n": args.n, "x_hat": args.x_hat,
                     "outage": inputs.outage_probability(s2, args.x_hat**2),
                     "rate_loss_bits": loss, "kl_bits": kl,
                     "kl_bound_bits": args.x_hat**2 / s2 / math.log(2.0)})
    cols = ["snr_db", "rho", "n", "x_hat", "outage", "rate_loss_bits", "kl_bits", "kl_bound_bits"]
    params = {"n": args.n, "x_hat": args.x_hat, "snr_db": args.snr_db, "tol": args.tol, "sigma_n_sq": args.sigma_n_sq}
    emit(rows, cols, _metadata(args, params), args.format, args.out)
    return 0


def _campaign_config(args) -> nft.CampaignConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in ("runs", "slots", "power_dbm", "distance_km", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    fiber = FiberSystem(**{k: v for k, v in values.items() if k in _FIBER_KEYS})
    camp = {k: v for k, v in values.items() if k in _CAMPAIGN_KEYS}
    cfg = nft.CampaignConfig(fiber=fiber, **camp)
    if getattr(args, "no_reference", False):
        cfg = replace(cfg, reference=False)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _campaign_config(args)
    geo = nft.geometry(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = nft.campaign(cfg)
    meta = _metadata(args, cfg.to_dict())
    meta["seed"] = cfg.seed
    meta.update({"ts": repr(geo.ts), "dt": repr(geo.dt), "sigma_n_sq": repr(geo.sigma_n_sq),
                 "sigma_s_sq": repr(geo.sigma_s_sq), "d_noise": repr(geo.d_noise)})
    with open(out_dir / "pairs.csv", "w", newline="") as fh:
        nft.write_pairs(rows, fh, meta)
    (out_dir / "config.txt").write_text(format_config(cfg))
    for run in range(min(args.waveforms, cfg.runs)):
        sent, received = nft.simulate_run(cfg, run)
        sent.save(out_dir / f"run{run:05d}_sent.chiwave")
        received.save(out_dir / f"run{run:05d}_received.chiwave")
    ok = sum(r["status"] == "ok" for r in rows)
    print(f"wrote {len(rows)} pairs ({ok} detected) to {out_dir / 'pairs.csv'}", file=sys.stderr)
    return 0


def cmd_nft_extract(args) -> int:
    frame = solitonsim.WaveformFrame.load(args.input)
    if args.oversample > 1:
        frame = solitonsim.WaveformFrame(frame.dt / args.oversample,
                                         nft.oversample(frame.samples, args.oversample), frame.t0)
    rows = []
    if args.ts:
        win = nft.slot_windows(frame.samples[None, :], frame.dt, frame.t0, args.slots, args.ts)[0]
        amp, res, status = nft.extract_batch(win, frame.dt, args.sigma_min)
        for k in range(args.slots):
            rows.append({"slot": k, "amplitude": float(amp[k]), "residual": float(res[k]), "status": status[k]})
    else:
        amp, res, status = nft.extract_batch(frame.samples[None, :], frame.dt, args.sigma_min)
        rows.append({"slot": 0, "amplitude": float(amp[0]), "residual": float(res[0]), "status": status[0]})
    params = {"input": args.input, "ts": args.ts, "slots": args.slots, "sigma_min": args.sigma_min,
              "oversample": args.oversample}
    emit(rows, ["slot", "amplitude", "residual", "status"], _metadata(args, params), args.format, args.out)
    return 0 if all(r["status"] == "ok" for r in rows) else 1


def cmd_validate(args) -> int:
    with open(args.pairs) as fh:
        rows, pair_meta = nft.read_pairs(fh)
    s2 = args.sigma_n_sq if args.sigma_n_sq is not None else float(pair_meta.get("sigma_n_sq", "nan"))
    if not s2 > 0:
        raise CliError("noise variance unknown: pass --sigma-n-sq or use a pair file written by simulate")
    if args.cutoff is not None:
        cutoff = args.cutoff
    elif "ts" in pair_meta:
        cutoff = nft.energy_cutoff(float(pair_meta["ts"]))
    else:
        cutoff = 0.0
    rep = nft.validate_pairs(rows, s2, n=args.n, cutoff=cutoff, bins=args.bins, alpha=args.alpha,
                             corr_threshold=args.corr_threshold)
    out = [
        {"test": "chi_law_fit", "conditioned_on": rep.conditioned_on, "statistic": rep.fit.statistic,
         "p_value": rep.fit.p_value, "samples": rep.fit.samples, "threshold": args.alpha,
         "passed": rep.fit.passed},
        {"test": "correlation_offdiag_max", "conditioned_on": "", "statistic": rep.corr_max_offdiag,
         "p_value": "", "samples": rep.total, "threshold": args.corr_threshold, "passed": rep.corr_passed},
    ]
    if rep.fit_sent is not None:
        out.append({"test": "chi_law_fit_diagnostic", "conditioned_on": "x_sent",
                    "statistic": rep.fit_sent.statistic, "p_value": rep.fit_sent.p_value,
                    "samples": rep.fit_sent.samples, "threshold": args.alpha, "passed": rep.fit_sent.passed})
    for b in rep.bin_fits:
        out.append({"test": f"chi_law_fit_bin[{b['a_lo']:.4g},{b['a_hi']:.4g}]",
                    "conditioned_on": rep.conditioned_on, "statistic": "", "p_value": b["p_value"],
                    "samples": b["samples"], "threshold": args.alpha / max(1, len(rep.bin_fits)),
                    "passed": b["passed"]})
    params = {"pairs": args.pairs, "sigma_n_sq": s2, "n": args.n, "cutoff": cutoff, "bins": args.bins,
              "alpha": args.alpha, "corr_threshold": args.corr_threshold,
              "failed_detections": rep.failures, "total_slots": rep.total}
    meta = _metadata(args, params)
    corr = nft.correlation_matrix(nft.pairs_to_matrix(rows))
    meta["correlation_matrix"] = json.dumps(np.round(corr, 6).tolist())
    cols = ["test", "conditioned_on", "statistic", "p_value", "samples", "threshold", "passed"]
    emit(out, cols, meta, args.format, args.out)
    return 0 if rep.passed else 1


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chi-capacity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    def channel_args(sp):
        sp.add_argument("--n", type=int, required=True, help="half the degrees of freedom")
        sp.add_argument("--sigma-n-sq", type=float, default=1.0)

    sp = sub.add_parser("mi-curve", help="mutual information versus SNR for a continuous input")
    channel_args(sp)
    sp.add_argument("--input", choices=CLI_INPUTS, required=True)
    sp.add_argument("--snr-db", type=parse_range, required=True, help="from:to:step in dB")
    sp.add_argument("--method", choices=("quadrature", "mc"), default="quadrature")
    sp.add_argument("--samples", type=int, default=10**6)
    sp.add_argument("--tol", type=float, default=mi.DEFAULT_TOL)
    sp.add_argument("--x-hat", type=float, default=0.0, help="truncation point for truncated-rayleigh")
    sp.add_argument("--with-asymptote", action="store_true")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_mi_curve)

    sp = sub.add_parser("ask", help="mutual information of equiprobable M-ASK")
    channel_args(sp)
    sp.add_argument("--m", type=int, required=True, help="number of constellation points")
    sp.add_argument("--snr-db", type=parse_range, required=True)
    sp.add_argument("--tol", type=float, default=mi.DEFAULT_TOL)
    common(sp)
    sp.set_defaults(func=cmd_ask)

    sp = sub.add_parser("cond-entropy", help="semi-analytic Rayleigh-input entropies")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--snr-db", type=parse_range, required=True)
    common(sp)
    sp.set_defaults(func=cmd_cond_entropy)

    sp = sub.add_parser("asymptote", help="high-SNR Rayleigh-input expansions")
    sp.add_argument("--snr-db", type=parse_range, required=True)
    common(sp)
    sp.set_defaults(func=cmd_asymptote)

    sp = sub.add_parser("rate-loss", help="rate lost by truncating the Rayleigh input")
    channel_args(sp)
    sp.add_argument("--x-hat", type=float, required=True)
    sp.add_argument("--snr-db", type=parse_range, required=True)
    sp.add_argument("--tol", type=float, default=mi.DEFAULT_TOL)
    common(sp)
    sp.set_defaults(func=cmd_rate_loss)

    sp = sub.add_parser("simulate", help="split-step soliton campaign producing amplitude pairs")
    sp.add_argument("--config", help="key = value fibre/campaign file (defaults: built-in link)")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--slots", type=int)
    sp.add_argument("--power-dbm", type=float)
    sp.add_argument("--distance-km", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--waveforms", type=int, default=1, help="number of runs whose waveforms are saved")
    sp.add_argument("--no-reference", action="store_true", help="skip the noiseless reference propagation")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("nft-extract", help="eigenvalue amplitudes from a waveform file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--ts", type=float, help="normalised slot length (omit for a single-pulse frame)")
    sp.add_argument("--slots", type=int, default=1)
    sp.add_argument("--sigma-min", type=float, default=0.0)
    sp.add_argument("--oversample", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_nft_extract)

    sp = sub.add_parser("validate", help="goodness of fit and memory test for a pair file")
    sp.add_argument("--pairs", required=True)
    sp.add_argument("--sigma-n-sq", type=float)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--cutoff", type=float, help="minimum conditioning amplitude A (default: energy cutoff)")
    sp.add_argument("--bins", type=int, default=50)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--corr-threshold", type=float, default=0.05)
    common(sp)
    sp.set_defaults(func=cmd_validate)
    return p


_SIGNED_FLAGS = ("--snr-db", "--power-dbm")


def _join_signed_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-10:40:5`` to their flag so argparse keeps them."""
    out, it = [], iter(argv)
    for arg in it:
        if arg in _SIGNED_FLAGS:
            value = next(it, None)
            if value is not None and value.startswith("-") and value[1:2].isdigit():
                out.append(f"{arg}={value}")
                continue
            out.append(arg)
            if value is not None:
                out.append(value)
        else:
            out.append(arg)
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_join_signed_values(argv))
    args.argv = argv
    try:
        return args.func(args)
    except (DomainError, CliError, ConvergenceError, OSError, ValueError) as exc:
        print(f"chi-capacity {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
