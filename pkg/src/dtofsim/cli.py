"""Command-line interface: render, sweep, metrics, velocity, modlab."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .harness import ExperimentSpec, run_sweep, summarize_across_psi, \
    write_rows_csv
from .integrator import IntegratorConfig, render
from .metrics import compute_metrics
from .modulation import ModulationConfig
from .pfm import read_pfm, write_pfm
from .scene import load_scene
from .varlab import (STRATEGIES, default_shift, modulation_signal,
                     strategy_variance, write_variance_csv)
from .modulation import Waveform
from .velocity import (FOUR_PHASE_OMEGA_TILDE, FOUR_PHASE_PSI_OFFSETS,
                       estimate_velocity_ratio, estimate_velocity_four_phase)

TWO_PI = 2.0 * np.pi


def _bool(s):
    return str(s).lower() in ("1", "true", "yes", "on")


def _load_scene_or_exit(path):
    if not os.path.exists(path):
        print(f"error: scene file not found: {path}", file=sys.stderr)
        sys.exit(2)
    return load_scene(path)


def _mod_config(scene, args):
    T = scene.exposure
    return ModulationConfig(omega_g=args.omega_g,
                            omega_d=args.omega_tilde * TWO_PI / T,
                            psi=args.psi, T=T,
                            low_pass=args.low_pass)


def _int_config(args):
    return IntegratorConfig(spp=args.spp, n_t=args.n_t,
                            strategy=args.strategy, t_s=args.t_s,
                            mapping=args.mapping, k_d=args.k_d,
                            k_max=args.k_max, seed=args.seed,
                            low_pass=args.low_pass,
                            precision=args.precision,
                            workers=args.workers)


def cmd_render(args):
    scene = _load_scene_or_exit(args.scene)
    mod_cfg = _mod_config(scene, args)
    cfg = _int_config(args)
    buffers = render(scene, mod_cfg, cfg)
    os.makedirs(args.out, exist_ok=True)
    for name in ("dtof", "intensity", "variance"):
        write_pfm(os.path.join(args.out, f"{name}.pfm"), buffers[name])
    with open(os.path.join(args.out, "diag.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["key", "value"])
        w.writerow(["scene", args.scene])
        w.writerow(["omega_tilde", args.omega_tilde])
        w.writerow(["psi", args.psi])
        w.writerow(["strategy", args.strategy])
        w.writerow(["mapping", args.mapping])
        w.writerow(["spp", args.spp])
        w.writerow(["seed", args.seed])
        w.writerow(["mean_variance", float(buffers["variance"].mean())])
    return 0


def cmd_sweep(args):
    with open(args.experiment) as f:
        desc = json.load(f)
    desc.setdefault("workers", args.workers)
    spec = ExperimentSpec(**{k: tuple(v) if isinstance(v, list) else v
                             for k, v in desc.items()})
    if not os.path.exists(spec.scene_path):
        print(f"error: scene file not found: {spec.scene_path}",
              file=sys.stderr)
        return 2
    rows = run_sweep(spec, out_dir=args.out)
    summary = summarize_across_psi(rows)
    write_rows_csv(os.path.join(args.out, "summary.csv"), summary)
    print(f"wrote {len(rows)} rows to {args.out}/metrics.csv")
    return 0


def cmd_metrics(args):
    buf = read_pfm(args.buffer)
    ref = read_pfm(args.reference)
    m = compute_metrics(buf, ref)
    for k, v in m.items():
        print(f"{k},{v}")
    return 0


def cmd_velocity(args):
    scene = _load_scene_or_exit(args.scene)
    T = scene.exposure
    os.makedirs(args.out, exist_ok=True)

    def render_at(omega_tilde, psi):
        mod_cfg = ModulationConfig(omega_g=args.omega_g,
                                   omega_d=omega_tilde * TWO_PI / T,
                                   psi=psi, T=T)
        cfg = IntegratorConfig(spp=args.spp, strategy="shifted",
                               mapping="replay", k_max=args.k_max,
                               seed=args.seed, workers=args.workers)
        return render(scene, mod_cfg, cfg)["dtof"].astype(np.float64)

    if args.estimator == "ratio":
        het = render_at(1.0, 0.0)
        hom = render_at(0.0, 0.0)
        speed, valid = estimate_velocity_ratio(het, hom, args.omega_g, T)
    else:
        hets = [render_at(FOUR_PHASE_OMEGA_TILDE, psi)
                for psi in FOUR_PHASE_PSI_OFFSETS]
        homs = [render_at(0.0, 0.0), render_at(0.0, np.pi / 2.0)]
        speed, valid = estimate_velocity_four_phase(hets, homs,
                                                     args.omega_g, T)
    write_pfm(os.path.join(args.out, "velocity.pfm"),
              speed.astype(np.float32))
    write_pfm(os.path.join(args.out, "valid.pfm"),
              valid.astype(np.float32))
    sel = speed[valid]
    if sel.size:
        print(f"velocity: mean={sel.mean():.4f} m/s "
              f"median={np.median(sel):.4f} m/s "
              f"valid={valid.mean() * 100:.1f}%")
    else:
        print("velocity: no valid pixels")
    return 0


def cmd_modlab(args):
    waveform = Waveform(args.waveform)
    wts = [float(x) for x in args.omega_tildes.split(",")]
    thetas = [float(x) for x in args.thetas.split(",")]
    rows = []
    for strategy in (args.strategies.split(",") if args.strategies
                     else STRATEGIES):
        for wt in wts:
            omega_d = wt * TWO_PI
            for theta_p in thetas:
                theta = theta_p - 0.5 * omega_d
                x = modulation_signal(waveform, omega_d, theta)
                t_s = args.t_s if args.t_s is not None \
                    else default_shift(strategy, 1.0)
                var = strategy_variance(x, 1.0, strategy, t_s)
                rows.append((wt, theta_p, strategy, t_s, var))
    write_variance_csv(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _add_render_args(p):
    p.add_argument("--scene", required=True)
    p.add_argument("--omega-tilde", dest="omega_tilde", type=float,
                   default=1.0)
    p.add_argument("--psi", type=float, default=0.0)
    p.add_argument("--omega-g", dest="omega_g", type=float,
                   default=TWO_PI * 30e6)
    p.add_argument("--strategy", default="shifted",
                   choices=("uniform", "stratified", "shifted", "mirrored",
                            "decorrelated-stratified"))
    p.add_argument("--mapping", default="replay",
                   choices=("replay", "reconnect", "adaptive", "none"))
    p.add_argument("--spp", type=int, default=64)
    p.add_argument("--n-t", dest="n_t", type=int, default=2)
    p.add_argument("--t-s", dest="t_s", type=float, default=None)
    p.add_argument("--k-d", dest="k_d", type=int, default=None)
    p.add_argument("--k-max", dest="k_max", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--low-pass", dest="low_pass", type=_bool, default=True)
    p.add_argument("--precision", type=int, default=64, choices=(32, 64))
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("DTOF_WORKERS", "1")))


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dtof",
        description="Doppler time-of-flight rendering simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render D-ToF buffers for a scene")
    _add_render_args(p)
    p.add_argument("-o", "--out", default="out")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("sweep", help="run an experiment sweep from a spec")
    p.add_argument("--experiment", required=True)
    p.add_argument("-o", "--out", default="sweep")
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("DTOF_WORKERS", "1")))
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("metrics", help="compare two PFM buffers")
    p.add_argument("--buffer", required=True)
    p.add_argument("--reference", required=True)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("velocity", help="render and reconstruct velocity")
    p.add_argument("--scene", required=True)
    p.add_argument("--estimator", default="ratio",
                   choices=("ratio", "four-phase"))
    p.add_argument("--omega-g", dest="omega_g", type=float,
                   default=TWO_PI * 30e6)
    p.add_argument("--spp", type=int, default=64)
    p.add_argument("--k-max", dest="k_max", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("DTOF_WORKERS", "1")))
    p.add_argument("-o", "--out", default="velocity")
    p.set_defaults(fn=cmd_velocity)

    p = sub.add_parser("modlab", help="1D time-sampling variance analysis")
    p.add_argument("--waveform", default="sinusoidal",
                   choices=("sinusoidal", "rectangular", "triangular",
                            "trapezoidal"))
    p.add_argument("--strategies", default="")
    p.add_argument("--omega-tildes", default="0.25,0.5,0.75,1.0")
    p.add_argument("--thetas", default="0.0")
    p.add_argument("--t-s", dest="t_s", type=float, default=None)
    p.add_argument("-o", "--out", default="varlab.csv")
    p.set_defaults(fn=cmd_modlab)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
