"""Seeded synthetic series used as fixtures and for desk-scale experiments."""
import numpy as np

from .series import TimeSeries

SPECS = ("ar1", "seasonal", "regime_switch")


def _ar(phis, noise, eps):
    y = np.empty(eps.size)
    prev = 0.0
    for t in range(eps.size):
        prev = phis[t] * prev + noise * eps[t]
        y[t] = prev
    return y


def generate_synthetic(spec, n, seed=0, series_id=None, **params) -> TimeSeries:
    """Generate a synthetic series.

    ar1
        ``y_t = phi * y_{t-1} + noise * e_t`` (``phi=0.7``, ``noise=1``).
    seasonal
        ``amplitude * sin(2 pi t / period) + noise * e_t`` plus a linear ``trend``.
    regime_switch
        Integrated series whose increments follow an AR(1) with coefficient
        ``phi1`` (0.9) before index ``n // 2``. From the midpoint on the
        coefficient becomes ``phi2`` (-0.6) whenever the previous increment is
        positive, a threshold AR that favours non-linear learners, so the best
        forecaster changes mid-series. ``shift`` adds a level shift at the switch.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n)
    t = np.arange(n)
    if spec == "ar1":
        values = _ar(np.full(n, params.get("phi", 0.7)), params.get("noise", 1.0), eps)
    elif spec == "seasonal":
        period = params.get("period", 12)
        values = (params.get("amplitude", 1.0) * np.sin(2 * np.pi * t / period)
                  + params.get("trend", 0.0) * t + params.get("noise", 0.2) * eps)
    elif spec == "regime_switch":
        switch = n // 2
        phi1, phi2 = params.get("phi1", 0.9), params.get("phi2", -0.6)
        noise = params.get("noise", 1.0)
        z = np.empty(n)
        prev = 0.0
        for i in range(n):
            phi = phi2 if (i >= switch and prev > 0) else phi1
            prev = phi * prev + noise * eps[i]
            z[i] = prev
        values = np.cumsum(z)
        values[switch:] += params.get("shift", 0.0)
    else:
        raise ValueError(f"unknown synthetic spec {spec!r}; choose from {SPECS}")
    return TimeSeries(series_id or f"{spec}_{seed}", values)
