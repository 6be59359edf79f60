"""Unbiased Monte Carlo simulation of Doppler time-of-flight cameras."""

from .constants import SPEED_OF_LIGHT
from .integrator import IntegratorConfig, estimate_pixel, render, \
    render_analytic_approx
from .metrics import compute_metrics, mae, mse, psnr, rmse
from .modulation import ModulationConfig, Waveform
from .pfm import read_pfm, write_pfm
from .scene import Scene, load_scene, save_scene, scene_hash
from .velocity import estimate_velocity_ratio, estimate_velocity_four_phase

__all__ = [
    "SPEED_OF_LIGHT", "IntegratorConfig", "estimate_pixel", "render",
    "render_analytic_approx", "compute_metrics", "mae", "mse", "psnr",
    "rmse", "ModulationConfig", "Waveform", "read_pfm", "write_pfm",
    "Scene", "load_scene", "save_scene", "scene_hash",
    "estimate_velocity_ratio", "estimate_velocity_four_phase",
]

__version__ = "0.1.0"
