"""Least-squares fits for diffusion rate, localization length, Gaussian width and plateaus."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_FLOOR = 1e-12
MIN_DECADES = 4.0


@dataclass
class FitResult:
    """One fitted parameter.

    ``r2`` is computed on the scale the fit was made on (``scale``).
    """

    name: str
    value: float
    intercept: float
    window: tuple
    r2: float
    n_points: int
    scale: str
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "intercept": self.intercept,
            "window": list(self.window),
            "r2": self.r2,
            "n_points": self.n_points,
            "scale": self.scale,
            "flags": list(self.flags),
        }


def _lstsq(x, y, intercept=True):
    if intercept:
        A = np.column_stack([x, np.ones_like(x)])
        (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    else:
        slope, icpt = np.dot(x, y) / np.dot(x, x), 0.0
    resid = y - (slope * x + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    ss_res = np.sum(resid**2)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, np.sum(y**2)) else 0.0
    return float(slope), float(icpt), float(r2)


def fit_linear_diffusion(t, y, window=(5, 30), fit_intercept=False) -> FitResult:
    """Slope ``D`` of ``<p^2>(t) = D t`` over ``window`` (inclusive); ``fit_intercept`` adds ``+ c``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < 3:
        raise ValueError(f"fewer than 3 points in window {window}")
    slope, icpt, r2 = _lstsq(t[sel], y[sel], fit_intercept)
    return FitResult("D", slope, icpt, (float(t[sel].min()), float(t[sel].max())), r2,
                     int(sel.sum()), "linear")


def _profile(P, hbar, floor):
    P = np.asarray(P, dtype=float)
    M = P.size // 2
    p = (np.arange(P.size) - M) * hbar
    keep = P > floor
    if keep.sum() < 10:
        raise ValueError(f"only {keep.sum()} sites above floor {floor:g}; need at least 10")
    return p[keep], np.log(P[keep])


def _decades(logP):
    return (logP.max() - logP.min()) / np.log(10.0)


def fit_exponential_localization(P, hbar, floor=DEFAULT_FLOOR) -> FitResult:
    """Localization length ``zeta`` from ``ln P = a - |p|/zeta``.

    A first fit over all sites above ``floor`` gives ``zeta0``; the reported
    fit repeats it without the core ``|p| < zeta0``.
    """
    p, logP = _profile(P, hbar, floor)
    x = np.abs(p)
    slope0, _, _ = _lstsq(x, logP)
    zeta0 = -1.0 / slope0 if slope0 < 0 else np.inf
    sel = x >= zeta0
    flags = []
    if sel.sum() < 3 or not np.isfinite(zeta0):
        sel = np.ones_like(x, dtype=bool)
        flags.append("core_not_excluded")
    slope, icpt, r2 = _lstsq(x[sel], logP[sel])
    if _decades(logP[sel]) < MIN_DECADES:
        flags.append("insufficient_dynamic_range")
    _, _, r2_alt = _lstsq(x[sel] ** 2, logP[sel])
    if r2_alt > r2:
        flags.append("model_mismatch")
    zeta = -1.0 / slope if slope < 0 else np.inf
    return FitResult("zeta", float(zeta), icpt, (float(x[sel].min()), float(x[sel].max())), r2,
                     int(sel.sum()), "log", flags)


def fit_gaussian(P, hbar, floor=DEFAULT_FLOOR) -> FitResult:
    """Width ``sigma`` from ``ln P = a - p^2/sigma`` over sites above ``floor``."""
    p, logP = _profile(P, hbar, floor)
    slope, icpt, r2 = _lstsq(p**2, logP)
    flags = []
    if _decades(logP) < MIN_DECADES:
        flags.append("insufficient_dynamic_range")
    _, _, r2_alt = _lstsq(np.abs(p), logP)
    if r2_alt > r2:
        flags.append("model_mismatch")
    sigma = -1.0 / slope if slope < 0 else np.inf
    return FitResult("sigma", float(sigma), icpt, (float(np.abs(p).min()), float(np.abs(p).max())),
                     r2, int(p.size), "log", flags)


@dataclass
class Saturation:
    mean: float
    drift: float
    saturated: bool
    tail: tuple


def saturation_value(y, tail_fraction=0.2, t=None, max_drift=0.05) -> Saturation:
    """Mean over the trailing ``tail_fraction`` of a series and its relative drift.

    ``drift`` is the change of the least-squares line across the tail
    divided by the tail mean; the series counts as saturated when
    ``|drift| < max_drift``.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 10:
        raise ValueError("saturation needs at least 10 points")
    t = np.arange(y.size, dtype=float) if t is None else np.asarray(t, dtype=float)
    k = max(3, int(round(tail_fraction * y.size)))
    tt, yy = t[-k:], y[-k:]
    mean = float(yy.mean())
    slope, _, _ = _lstsq(tt, yy)
    change = slope * (tt[-1] - tt[0])
    if mean != 0:
        drift = change / abs(mean)
    else:
        drift = 0.0 if change == 0 else np.inf
    return Saturation(mean, float(drift), bool(abs(drift) < max_drift), (float(tt[0]), float(tt[-1])))
