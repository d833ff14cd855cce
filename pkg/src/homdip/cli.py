"""Command-line entry point: dip, sweep, compensate, fit, spectrum."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__
from . import config as cfgmod
from .errors import HomDipError
from .export import config_hash, fmt, read_profile_csv, write_csv, write_json, write_profile_csv
from .interference import dip_profile
from .inverse import compensate, fit_dip, profile_with_auto_range, sweep
from .metrics import closed_form_visibility, dip_metrics
from .phase import PhaseExpansion, slm_quantize
from .spectra import apply_slit, gaussian_spectrum, read_spectrum_csv, sample_rows


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (dotted path); repeatable")
    p.add_argument("--grid", default=None, metavar="NxM", help="quadrature points (omega x omega_p)")
    p.add_argument("--tau", default=None, metavar="START:STOP:STEP", help="delay grid in fs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homdip", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dip", help="simulate a dip profile and its metrics")
    _add_common(p)

    p = sub.add_parser("sweep", help="visibility and FWHM versus beta2 or beta3")
    _add_common(p)
    p.add_argument("--axis", choices=["beta2", "beta3"], default=None)
    p.add_argument("--values", default=None, help="comma-separated values (fs^2 or fs^3)")

    p = sub.add_parser("compensate", help="SLM coefficients cancelling the channel dispersion")
    _add_common(p)
    p.add_argument("--objective", choices=["maximize-visibility", "minimize-fwhm"], default=None)

    p = sub.add_parser("fit", help="fit dispersion, delay and purity to a measured profile")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True, help="CSV delay scan")
    p.add_argument("--free", default=None, help="comma-separated subset of beta2,beta3,tau0,p")

    p = sub.add_parser("spectrum", help="write a normalized spectrum CSV")
    p.add_argument("source", choices=["gaussian", "csv"])
    p.add_argument("args", nargs=2, metavar="ARG",
                   help="gaussian: CENTER_NM FWHM_NM; csv: PATH CENTER_NM")
    p.add_argument("--slit-width-nm", type=float, default=None)
    p.add_argument("--slit-center-nm", type=float, default=None)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--out", type=Path, default=Path("."))
    return parser


def _sidecar(args, conf, extra) -> None:
    payload = {
        "command": args.command,
        "version": __version__,
        "config": conf,
        "config_sha256": config_hash(conf),
    }
    payload.update(extra)
    write_json(args.out / "run.json", payload)


def _profile(args, conf):
    cfg = cfgmod.build(conf)
    tot = cfgmod.totals(conf)
    taus = cfgmod.tau_grid(conf)
    if taus is None:
        profile, _ = profile_with_auto_range(cfg, tot.beta2, tot.beta3, delay_offset=tot.tau)
    else:
        profile = dip_profile(cfg, tot.beta2, tot.beta3, taus, delay_offset=tot.tau)
    cf = closed_form_visibility(cfg.bs.T, cfg.bs.R, cfg.purity.V_I)
    return cfg, tot, profile, dip_metrics(profile, closed_form=cf)


def cmd_dip(args, conf) -> None:
    cfg, tot, profile, metrics = _profile(args, conf)
    write_profile_csv(args.out / "profile.csv", profile)
    write_json(args.out / "metrics.json", metrics.to_dict())
    _sidecar(args, conf, {
        "totals": {"tau_fs": tot.tau, "beta2_fs2": tot.beta2, "beta3_fs3": tot.beta3},
        "grid": list(profile.grid_shape),
        "half_grid_delta": profile.half_grid_delta,
        "converged": profile.converged,
    })
    print(f"visibility {fmt(metrics.visibility)}  fwhm_fs {fmt(metrics.fwhm)}")


def cmd_sweep(args, conf) -> None:
    if args.axis:
        conf["sweep"]["axis"] = args.axis
    if args.values:
        try:
            conf["sweep"]["values"] = [float(v) for v in args.values.split(",")]
        except ValueError:
            raise cfgmod.ConfigError(f"--values {args.values!r}: expected comma-separated numbers") from None
    cfg = cfgmod.build(conf)
    tot = cfgmod.totals(conf)
    s = conf["sweep"]
    result = sweep(cfg, s["axis"], s["values"], beta2=tot.beta2, beta3=tot.beta3, label=conf["preset"] or "custom")
    write_csv(args.out / "sweep.csv", ["value", "visibility", "fwhm_fs"], result.rows())
    meta = {"axis": result.axis, "config_label": result.config_label, "tau_spans_fs": result.tau_spans,
            "converged": result.converged}
    write_json(args.out / "sweep.json", meta)
    _sidecar(args, conf, meta)
    for row in result.rows():
        print(" ".join(fmt(x) for x in row))


def cmd_compensate(args, conf) -> None:
    if args.objective:
        conf["compensate"]["objective"] = args.objective
    cfg = cfgmod.build(conf)
    tot = cfgmod.totals(conf, include_slm=False)
    c = conf["compensate"]
    result = compensate(
        cfg, tot.beta2, tot.beta3, objective=c["objective"],
        beta2_box=(c["beta2_min_fs2"], c["beta2_max_fs2"]),
        beta3_box=(c["beta3_min_fs3"], c["beta3_max_fs3"]),
    )
    # the SLM also takes out the residual group delay
    slm = PhaseExpansion(beta1=-tot.tau, beta2=result.slm.beta2, beta3=result.slm.beta3, label="SLM")
    table = slm_quantize(slm, center_wavelength=cfg.pdc.center_wavelength)
    rows = zip(range(len(table.phases)), table.wavelengths, table.detunings, table.phases)
    write_csv(args.out / "slm_table.csv", ["pixel", "wavelength_nm", "detuning_rad_per_fs", "phase_rad"], rows)
    payload = {
        "objective": result.objective,
        "objective_value": result.objective_value,
        "visibility": result.visibility,
        "channel": {"tau_fs": tot.tau, "beta2_fs2": tot.beta2, "beta3_fs3": tot.beta3},
        "slm": {"beta1_fs": slm.beta1, "beta2_fs2": slm.beta2, "beta3_fs3": slm.beta3},
        "iterations": result.iterations,
        "converged": result.converged,
    }
    write_json(args.out / "compensate.json", payload)
    _sidecar(args, conf, {"converged": result.converged})
    print(f"slm beta2_fs2 {fmt(slm.beta2)}  beta3_fs3 {fmt(slm.beta3)}  visibility {fmt(result.visibility)}")


def cmd_fit(args, conf) -> None:
    if args.free:
        conf["fit"]["free"] = [s.strip() for s in args.free.split(",")]
    cfg = cfgmod.build(conf)
    measured = read_profile_csv(args.data, conf["fit"]["baseline_tau_fs"])
    result = fit_dip(measured, cfg, free=conf["fit"]["free"])
    write_json(args.out / "fit.json", result.to_dict())
    _sidecar(args, conf, {"data": str(args.data), "converged": result.converged})
    print(" ".join(f"{k} {fmt(v)}" for k, v in
                   (("beta2_fs2", result.beta2), ("beta3_fs3", result.beta3), ("tau0_fs", result.tau0), ("p", result.p))))


def cmd_spectrum(args) -> None:
    a, b = args.args
    try:
        if args.source == "gaussian":
            spec = gaussian_spectrum(float(a), float(b))
            conf = {"source": "gaussian", "center_nm": float(a), "fwhm_nm": float(b)}
        else:
            spec = read_spectrum_csv(a, float(b))
            conf = {"source": "csv", "path": a, "center_nm": float(b)}
    except ValueError as exc:
        if isinstance(exc, HomDipError):
            raise
        raise cfgmod.ConfigError(f"spectrum arguments: {exc}") from None
    if args.slit_width_nm is not None:
        spec = apply_slit(spec, args.slit_width_nm, args.slit_center_nm)
    conf.update(slit_width_nm=args.slit_width_nm, slit_center_nm=args.slit_center_nm, points=args.points)
    write_csv(args.out / "spectrum.csv", ["wavelength_nm", "intensity"], sample_rows(spec, args.points))
    _sidecar(args, conf, {"fwhm_nm": spec.fwhm_nm, "clipped": spec.clipped})
    print(f"fwhm_nm {fmt(spec.fwhm_nm)}")


COMMANDS = {"dip": cmd_dip, "sweep": cmd_sweep, "compensate": cmd_compensate, "fit": cmd_fit}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "spectrum":
                cmd_spectrum(args)
            else:
                conf = cfgmod.load_config(args.config, args.sets, args.grid, args.tau)
                COMMANDS[args.command](args, conf)
    except cfgmod.ConfigError as exc:
        print(f"homdip: config error: {exc}", file=sys.stderr)
        return 2
    except HomDipError as exc:
        print(f"homdip: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"homdip: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
