"""Image comparison metrics for rendered buffers.

PSNR uses the maximum absolute value of the reference as the peak (signed
buffers have no natural white point); identical buffers report the capped
sentinel instead of infinity.
"""

from __future__ import annotations

import numpy as np

PSNR_CAP_DB = 300.0


def _check(buffer, reference):
    buffer = np.asarray(buffer, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if buffer.shape != reference.shape:
        raise ValueError(f"resolution mismatch: {buffer.shape} "
                         f"vs {reference.shape}")
    return buffer, reference


def mse(buffer, reference):
    buffer, reference = _check(buffer, reference)
    return float(np.mean((buffer - reference) ** 2))


def rmse(buffer, reference):
    return float(np.sqrt(mse(buffer, reference)))


def mae(buffer, reference):
    buffer, reference = _check(buffer, reference)
    return float(np.mean(np.abs(buffer - reference)))


def psnr(buffer, reference):
    buffer, reference = _check(buffer, reference)
    err = mse(buffer, reference)
    peak = float(np.max(np.abs(reference)))
    if err == 0.0 or peak == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(peak ** 2 / err), PSNR_CAP_DB))


def compute_metrics(buffer, reference):
    """All metrics as a dict (RMSE, MAE, PSNR in dB, MSE)."""
    return {"rmse": rmse(buffer, reference),
            "mae": mae(buffer, reference),
            "psnr": psnr(buffer, reference),
            "mse": mse(buffer, reference)}
