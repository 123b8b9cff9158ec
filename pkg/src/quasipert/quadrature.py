"""Time grids and oscillatory integrals over piecewise-smooth profiles."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from .profiles import Profile

SIMPSON_PANELS = 400
SIMPSON_RTOL = 1e-9
_MAX_DOUBLINGS = 14


def segments(T: float, breakpoints=()) -> list[tuple[float, float]]:
    """Split ``[0, T]`` at every breakpoint strictly inside it."""
    if not T > 0:
        raise ValueError("horizon T must be positive")
    cuts = sorted({0.0, float(T)} | {float(b) for b in breakpoints if 0.0 < b < T})
    return list(zip(cuts[:-1], cuts[1:]))


def time_grid(T: float, dt: float, breakpoints=()) -> np.ndarray:
    """Strictly increasing grid on ``[0, T]`` with every breakpoint on a node.

    Each segment is divided uniformly with step at most ``dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    pieces = []
    for a, b in segments(T, breakpoints):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    pieces.append(np.array([float(T)]))
    return np.concatenate(pieces)


def sample(profile: Profile, t: np.ndarray) -> np.ndarray:
    """Evaluate ``profile`` on a segment's nodes using inward one-sided limits at the ends."""
    v = np.asarray(profile.value(t), dtype=float).copy()
    v[0] = profile.value(t[0], side=+1)
    v[-1] = profile.value(t[-1], side=-1)
    return v


def _simpson_segment(profile, omegas, a, b, n):
    t = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (3.0 * n)
    f = sample(profile, t) * w
    return np.exp(1j * np.outer(omegas, t)) @ f


def fourier_integral(profile: Profile, omegas, T: float, rtol: float = SIMPSON_RTOL,
                     panels: int = SIMPSON_PANELS, method: str = "simpson") -> np.ndarray:
    """``int_0^T profile(t) exp(i omega t) dt`` for every omega.

    ``simpson``: composite Simpson on each smooth segment (discontinuities sit
    on panel boundaries), starting at ``panels`` panels and doubling until the
    relative change is below ``rtol``.  ``adaptive``: scipy ``quad`` per omega,
    used as an independent cross-check.
    """
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    segs = segments(T, profile.breakpoints())
    total = np.zeros(om.shape, dtype=complex)
    if method == "adaptive":
        for a, b in segs:
            for j, w in enumerate(om):
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                # QUADPACK samples interior points only, so jumps at a, b are harmless
                re = integrate.quad(lambda t: profile.value(t) * math.cos(w * t), a, b,
                                    epsabs=1e-14, epsrel=rtol, limit=400)[0]
                im = integrate.quad(lambda t: profile.value(t) * math.sin(w * t), a, b,
                                    epsabs=1e-14, epsrel=rtol, limit=400)[0]
                total[j] += re + 1j * im
        return total if np.ndim(omegas) else total[0]
    if method != "simpson":
        raise ValueError(f"unknown quadrature {method!r}")
    for a, b in segs:
        # enough panels to resolve the fastest oscillation on this segment
        osc = np.max(np.abs(om), initial=0.0) * (b - a) / (2 * math.pi)
        n = max(panels, 2 * math.ceil(8 * osc))
        n += n % 2
        prev = _simpson_segment(profile, om, a, b, n)
        floor = 1e-15 * (b - a)
        for _ in range(_MAX_DOUBLINGS):
            n *= 2
            cur = _simpson_segment(profile, om, a, b, n)
            if np.all(np.abs(cur - prev) <= rtol * np.abs(cur) + floor):
                break
            prev = cur
        total += cur
    return total if np.ndim(omegas) else total[0]


def exp_integral(omega: float, a: float, b: float) -> complex:
    """Closed form of ``int_a^b exp(i omega t) dt``."""
    if abs(omega) * max(abs(a), abs(b), b - a) < 1e-8:
        return complex(b - a)
    return (np.exp(1j * omega * b) - np.exp(1j * omega * a)) / (1j * omega)
