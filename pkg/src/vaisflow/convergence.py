"""Refinement-study helpers."""

from __future__ import annotations

import numpy as np

__all__ = ["fitted_order"]


def fitted_order(resolutions, errors) -> float:
    """Least-squares convergence order from per-resolution error norms.

    Fits log(err) against log(1/N); the slope is the observed order.
    """
    res = np.asarray(resolutions, dtype=np.float64)
    err = np.asarray(errors, dtype=np.float64)
    if res.shape != err.shape or res.size < 2:
        raise ValueError("need matching resolution/error sequences of length >= 2")
    if np.any(err <= 0):
        raise ValueError("errors must be positive to fit an order")
    slope = np.polyfit(np.log(1.0 / res), np.log(err), 1)[0]
    return float(slope)
