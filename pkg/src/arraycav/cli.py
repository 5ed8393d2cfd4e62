"""arraycav command-line interface.

Subcommands: validate, dispersion, spectrum, omparams, dynamics, kernel.
Every output file is accompanied by a ``<name>.manifest.json`` recording the
command, the resolved configuration snapshot, tool version, kernel-cache
hashes, and output digests, so any run can be reproduced byte-for-byte.

Exit codes: 0 ok, 2 configuration error, 3 numerical/convergence error,
4 consistency tolerance failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from . import cache as kcache
from .config import emit_config, parse_config, validate_regime
from .confined import confined_kernel_paraxial, free_space_kernel, projected_kernel
from .cavity_dynamics import build_two_mode, evolve_full, spectrum_scan
from .errors import ArrayCavError, ConfigError, ConvergenceError, RegimeError
from .lattice_sums import dispersion_curve, dispersion_grid, dispersion_point
from .om_dynamics import evolve_multimode, evolve_reduced, standard_model_report
from .optomech import (closed_form_params, coupling_matrix_C, mechanical_basis,
                       om_consistency)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CONSISTENCY = 4

# consistency tolerances, pinned
TOL_KAPPA_TRACE = 0.10
TOL_KAPPA2 = 0.05
TOL_G2 = 0.03


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


@dataclass
class RunManifest:
    """Everything needed to reproduce a run byte-for-byte."""

    command: str
    argv: list
    version: str
    config: str                  # resolved canonical config snapshot
    cache_dir: str | None        # kernel-cache location, if any
    outputs: list                # [{path, sha256}]
    extra: dict


def _write_manifest(command, args, cfg_text, outputs, extra=None):
    manifest = RunManifest(
        command=command,
        argv=[a for a in sys.argv[1:]],
        version=__version__,
        config=cfg_text,
        cache_dir=os.environ.get(kcache.ENV_VAR),
        outputs=[{"path": str(p), "sha256": _sha256(p)} for p in outputs],
        extra=extra or {},
    )
    payload = asdict(manifest)
    payload.update(payload.pop("extra"))
    path = str(outputs[0]) + ".manifest.json" if outputs else "run.manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    cfg = parse_config(text)
    return cfg, emit_config(cfg)


def cmd_validate(args):
    cfg, _text = _load_config(args.config)
    report = validate_regime(cfg)
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_CONSISTENCY


def cmd_dispersion(args):
    cfg, text = _load_config(args.config)
    path = [p.strip() for p in args.path.split(",") if p.strip()]
    pts = dispersion_curve(path, args.samples, cfg.lattice.a,
                           threads=args.threads, e_d=cfg.physical.e_d,
                           strict=False)
    q = 2.0 * np.pi
    with open(args.out, "w") as fh:
        fh.write("k_x/q,k_y/q,gamma_k/gamma,delta_k/gamma,method\n")
        for p in pts:
            dk = p.delta_k if p.delta_k is not None else np.nan
            fh.write(",".join(_fmt(x) for x in
                              (p.k_perp[0] / q, p.k_perp[1] / q, p.gamma_k, dk))
                     + f",{p.method}\n")
    _write_manifest("dispersion", args, text, [args.out],
                    {"path": path, "samples": args.samples})
    return EXIT_OK


def cmd_spectrum(args):
    cfg, text = _load_config(args.config)
    disp = dispersion_point((0.0, 0.0), cfg.lattice.a, e_d=cfg.physical.e_d)
    model = build_two_mode(cfg, disp)
    scan = spectrum_scan(model, (args.dc_min, args.dc_max), args.samples,
                         threads=args.threads)
    _write_csv(args.out, ["delta_c", "abs_a2", "phase"], scan)
    _write_manifest("spectrum", args, text, [args.out],
                    {"g_eff": model.g_eff,
                     "delta_minus_Delta": model.delta_minus_Delta})
    return EXIT_OK


def cmd_omparams(args):
    cfg, text = _load_config(args.config)
    grid = dispersion_grid(cfg.lattice.a, cfg.lattice.n_side,
                           e_d=cfg.physical.e_d)
    params = closed_form_params(cfg, grid.delta0)
    result = {"closed_form": {
        "g": params.g, "g_bar": params.g_bar, "g2": params.g2,
        "kappa_sc": params.kappa_sc, "Delta_AC": params.Delta_AC,
        "eta": params.eta, "N_a": params.N_a, "epsilon": params.epsilon,
        "g_eff": params.g_eff, "Delta": grid.delta0,
    }}
    result["standard_model"] = standard_model_report(params, cfg)
    result["ratios"] = {
        "kappa_sc_over_g": (params.kappa_sc / params.g if params.g else None),
        "g_over_eta": params.g / params.eta,
        "kappa_sc_over_eta2": params.kappa_sc / params.eta**2,
        "g2_over_eta2": params.g2 / params.eta**2,
    }
    exit_code = EXIT_OK
    if args.consistency:
        rep = om_consistency(cfg, grid, k_cut_abs=args.k_cut_over_q * 2 * np.pi
                             if args.k_cut_over_q else None)
        checks = {
            "kappa_trace_rel_dev": rep.kappa_rel_dev(),
            "kappa_trace_ok": rep.kappa_rel_dev() <= TOL_KAPPA_TRACE,
            "kappa2_fraction": rep.kappa2_fraction(),
            "kappa2_ok": rep.kappa2_fraction() <= TOL_KAPPA2,
        }
        g2_applicable = abs(np.sin(cfg.qz0)) < 1e-12
        if g2_applicable:
            g2_dev = abs(rep.g2_trace - rep.g2_closed) / rep.g2_closed
            checks["g2_rel_dev"] = g2_dev
            checks["g2_ok"] = bool(g2_dev <= TOL_G2)
        result["numerical"] = {
            "kappa_sc_trace": rep.kappa_sc_trace, "kappa_1": rep.kappa_1,
            "kappa_2": rep.kappa_2, "Delta_sc": rep.Delta_sc,
            "g2_trace": rep.g2_trace, "g2_closed_cos2": rep.g2_closed,
            "g2_flat_profile_variant": rep.g2_flat_profile,
        }
        result["tolerances_met"] = checks
        if not all(v for k, v in checks.items() if k.endswith("_ok")):
            exit_code = EXIT_CONSISTENCY
    with open(args.out, "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest("omparams", args, text, [args.out])
    return exit_code


def _projected_kernel_cached(cfg):
    prov = {"a": cfg.lattice.a, "n_side": cfg.lattice.n_side,
            "z0": cfg.cavity.z0, "k_cut": cfg.cavity.k_cut_abs,
            "derivative": 0}
    cached = kcache.load("confined", prov)
    if cached is None:
        conf = confined_kernel_paraxial(cfg.lattice, cfg.cavity.z0,
                                        cfg.cavity.k_cut_abs)
        kcache.store(conf)
    else:
        conf = cached
    fs = free_space_kernel(cfg.lattice, e_d=cfg.physical.e_d)
    return projected_kernel(fs, conf)


def cmd_dynamics(args):
    cfg, text = _load_config(args.config)
    if args.model == "full":
        kernel = _projected_kernel_cached(cfg)
        states = evolve_full(cfg, kernel, args.t_final, args.dt_out)
        rows = [(s.t, s.a.real, s.a.imag, float(np.sum(np.abs(s.sigma) ** 2)))
                for s in states]
        _write_csv(args.out, ["t", "re_a", "im_a", "sum_abs_sigma2"], rows)
    else:
        grid = dispersion_grid(cfg.lattice.a, cfg.lattice.n_side,
                               e_d=cfg.physical.e_d)
        params = closed_form_params(cfg, grid.delta0)
        if args.model == "reduced":
            states = evolve_reduced(cfg, params, args.t_final, args.dt_out)
        else:
            basis = mechanical_basis(cfg.lattice, cfg.cavity.w, args.seed)
            kernel = _projected_kernel_cached(cfg)
            d2 = projected_kernel(
                free_space_kernel(cfg.lattice, derivative=2, e_d=cfg.physical.e_d),
                confined_kernel_paraxial(cfg.lattice, cfg.cavity.z0,
                                         cfg.cavity.k_cut_abs, derivative=2))
            n_modes = min(args.modes, cfg.lattice.n_sites)
            C = coupling_matrix_C(cfg, basis, kernel, d2, grid, n_modes=n_modes)
            states = evolve_multimode(cfg, params, C, args.t_final, args.dt_out)
        rows = [(s.t, s.a.real, s.a.imag, s.b[0].real, s.b[0].imag,
                 abs(s.a) ** 2) for s in states]
        _write_csv(args.out, ["t", "re_a", "im_a", "re_b0", "im_b0", "abs_a2"], rows)
    _write_manifest("dynamics", args, text, [args.out], {"model": args.model})
    return EXIT_OK


def cmd_kernel(args):
    from .greens import (KernelSample, kernel_fs, kernel_fs_d2z,
                         kernel_fs_momentum)
    cfg, _text = _load_config(args.config)
    e_d = cfg.physical.e_d
    rx, ry = (float(x) for x in args.r_perp.split(","))
    if args.kind == "fs":
        sample = KernelSample(value=kernel_fs((rx, ry), args.dz, e_d),
                              kind="fs", argument=((rx, ry), args.dz))
    elif args.kind == "fs-d2z":
        sample = KernelSample(value=kernel_fs_d2z((rx, ry), e_d),
                              kind="fs_d2z", argument=((rx, ry),))
    else:
        k = (rx * 2 * np.pi, ry * 2 * np.pi)
        sample = KernelSample(value=kernel_fs_momentum(k, args.dz, e_d),
                              kind="momentum", argument=(k, args.dz))
    print(f"{sample.value.real:.17g} {sample.value.imag:+.17g}j")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="arraycav",
        description="2D atom-array cavity QED: dispersion, spectra, "
                    "optomechanical parameters and dynamics")
    parser.add_argument("--threads", type=int, default=os.cpu_count(),
                        help="worker threads for scans (results are ordered "
                             "deterministically regardless)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="evaluate physical-regime checks")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dispersion", help="collective-mode dispersion along a BZ path")
    p.add_argument("--config", required=True)
    p.add_argument("--path", default="G,X,M,G",
                   help="comma-separated waypoints: G, X, M or kx:ky pairs")
    p.add_argument("--samples", type=int, default=60)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("spectrum", help="two-oscillator steady-state drive scan")
    p.add_argument("--config", required=True)
    p.add_argument("--dc-min", type=float, required=True, dest="dc_min")
    p.add_argument("--dc-max", type=float, required=True, dest="dc_max")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("omparams", help="optomechanical parameters and consistency")
    p.add_argument("--config", required=True)
    p.add_argument("--consistency", action="store_true")
    p.add_argument("--k-cut-over-q", type=float, default=None, dest="k_cut_over_q",
                   help="override confinement cutoff (units q) for the checks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_omparams)

    p = sub.add_parser("dynamics", help="time evolution of a chosen model")
    p.add_argument("--config", required=True)
    p.add_argument("--model", choices=("multimode", "reduced", "full"),
                   default="reduced")
    p.add_argument("--t-final", type=float, required=True, dest="t_final")
    p.add_argument("--dt-out", type=float, default=None, dest="dt_out")
    p.add_argument("--seed", type=int, default=0,
                   help="mechanical-basis completion seed (multimode)")
    p.add_argument("--modes", type=int, default=256,
                   help="mechanical modes kept in the multimode model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("kernel", help="evaluate a dipole kernel at one point")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", choices=("fs", "fs-d2z", "momentum"), default="fs")
    p.add_argument("--r-perp", default="0.5,0.0", dest="r_perp",
                   help="transverse displacement (lambda) or wavevector (q)")
    p.add_argument("--dz", type=float, default=0.0)
    p.set_defaults(func=cmd_kernel)

    args = parser.parse_args(argv)
    if getattr(args, "dt_out", None) is None and args.command == "dynamics":
        args.dt_out = args.t_final / 200.0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, RegimeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArrayCavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
