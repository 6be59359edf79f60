"""Experiment plumbing: reference renders, sweeps, and metric reports.

A sweep renders a grid of (omega_tilde, psi) x (strategy, mapping, ...)
configurations of one scene, compares each against a shared unbiased
reference, and emits one CSV row per configuration.  The reference is the
simplest provably unbiased configuration: uniform time sampling, no
mapping, at a 64x sample budget with a distinct seed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .integrator import IntegratorConfig, render
from .metrics import compute_metrics
from .modulation import ModulationConfig
from .scene import load_scene, scene_hash

REFERENCE_BUDGET_FACTOR = 64
REFERENCE_SEED_OFFSET = 1000


def bundled_scene_path(name):
    """Filesystem path of a scene shipped with the package."""
    return str(resources.files("dtofsim").joinpath(f"scenes/{name}.json"))


@dataclass
class ExperimentSpec:
    scene_path: str
    omega_tildes: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    psis: tuple = (0.0,)
    strategies: tuple = ("uniform", "shifted")
    mappings: tuple = ("none", "replay")
    k_ds: tuple = (None,)
    n_ts: tuple = (2,)
    spp: int = 64
    seeds: tuple = (0,)
    k_max: int = 4
    omega_g: float = 2.0 * np.pi * 30e6
    exposure: float | None = None  # default: the scene's exposure
    reference_factor: int = REFERENCE_BUDGET_FACTOR
    workers: int = 1

    def __post_init__(self):
        if not (self.omega_tildes and self.psis and self.strategies
                and self.mappings):
            raise ValueError("experiment grids must be non-empty")
        if self.reference_factor < REFERENCE_BUDGET_FACTOR:
            raise ValueError("reference budget must be at least 64x")


def make_modulation(spec: ExperimentSpec, scene, omega_tilde, psi):
    T = spec.exposure if spec.exposure is not None else scene.exposure
    return ModulationConfig(omega_g=spec.omega_g,
                            omega_d=omega_tilde * 2.0 * np.pi / T,
                            psi=psi, T=T)


def render_reference(scene, mod_cfg, spec: ExperimentSpec, seed):
    cfg = IntegratorConfig(spp=spec.spp * spec.reference_factor,
                           strategy="uniform", mapping="none",
                           k_max=spec.k_max,
                           seed=seed + REFERENCE_SEED_OFFSET,
                           workers=spec.workers)
    return render(scene, mod_cfg, cfg)["dtof"]


def run_sweep(spec: ExperimentSpec, out_dir=None, reference_cache=None):
    """Run every configuration of the spec; returns the list of row dicts.

    ``reference_cache`` maps (omega_tilde, psi, seed) to a reference buffer
    so repeated sweeps can share references.  Row order is deterministic.
    """
    scene = load_scene(spec.scene_path)
    shash = scene_hash(scene)
    if reference_cache is None:
        reference_cache = {}
    rows = []
    for wt in spec.omega_tildes:
        for psi in spec.psis:
            mod_cfg = make_modulation(spec, scene, wt, psi)
            for seed in spec.seeds:
                key = (wt, psi, seed)
                if key not in reference_cache:
                    reference_cache[key] = render_reference(
                        scene, mod_cfg, spec, seed)
                ref = reference_cache[key]
                if ref.shape != tuple(scene.camera.resolution)[::-1]:
                    raise ValueError("reference resolution mismatch")
                for strategy in spec.strategies:
                    for mapping in spec.mappings:
                        for k_d in spec.k_ds:
                            for n_t in spec.n_ts:
                                cfg = IntegratorConfig(
                                    spp=spec.spp, n_t=n_t,
                                    strategy=strategy, mapping=mapping,
                                    k_d=k_d, k_max=spec.k_max, seed=seed,
                                    workers=spec.workers)
                                buf = render(scene, mod_cfg, cfg)["dtof"]
                                m = compute_metrics(buf, ref)
                                rows.append({
                                    "scene_hash": shash,
                                    "omega_tilde": wt, "psi": psi,
                                    "seed": seed, "strategy": strategy,
                                    "mapping": mapping,
                                    "k_d": cfg.k_d, "n_t": n_t,
                                    "spp": spec.spp, **m})
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_rows_csv(os.path.join(out_dir, "metrics.csv"), rows)
    return rows


def write_rows_csv(path, rows):
    if not rows:
        return
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)


def summarize_across_psi(rows):
    """Mean and std of each metric across psi, per remaining configuration."""
    groups = {}
    for r in rows:
        key = (r["omega_tilde"], r["strategy"], r["mapping"], r["k_d"],
               r["n_t"], r["seed"])
        groups.setdefault(key, []).append(r)
    out = []
    for key, grp in sorted(groups.items(), key=str):
        entry = {"omega_tilde": key[0], "strategy": key[1],
                 "mapping": key[2], "k_d": key[3], "n_t": key[4],
                 "seed": key[5]}
        for metric in ("rmse", "mae", "psnr"):
            vals = np.array([g[metric] for g in grp])
            entry[f"{metric}_mean"] = float(vals.mean())
            entry[f"{metric}_std"] = float(vals.std())
        out.append(entry)
    return out
