"""Dimensionless time profiles that multiply spatial field polynomials.

Amplitudes live in the polynomial coefficients, so two terms with equal
profiles can be merged exactly.  Every profile evaluates on scalars or
arrays and accepts ``side`` (+1 / -1) to pick the one-sided limit at a jump,
which lets integrators place discontinuities on step boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_JUMP_TOL = 1e-12


class Profile:
    """Base class.  Subclasses are frozen dataclasses, hence hashable."""

    def value(self, t, side: int = 0):
        raise NotImplementedError

    def breakpoints(self) -> tuple:
        return ()

    def derivative(self):
        """Smooth part of d/dt as ``(scale, profile)``; ``(0.0, None)`` if zero."""
        raise NotImplementedError(f"{type(self).__name__} has no derivative rule")

    def jumps(self) -> tuple:
        """``((time, jump_size), ...)`` where the profile is discontinuous."""
        return ()

    def antiderivative(self) -> "Profile":
        return Integral(self)

    def sort_key(self) -> str:
        return repr(self)

    def __call__(self, t, side: int = 0):
        return self.value(t, side)


def _window(t, t1, side):
    t = np.asarray(t, dtype=float)
    if side > 0:
        return (t >= 0) & (t < t1)
    if side < 0:
        return (t > 0) & (t <= t1)
    return (t >= 0) & (t <= t1)


def _out(v, t):
    return float(v) if np.ndim(t) == 0 else v


@dataclass(frozen=True)
class Const(Profile):
    def value(self, t, side=0):
        return _out(np.ones_like(np.asarray(t, dtype=float)), t)

    def derivative(self):
        return 0.0, None

    def antiderivative(self):
        return Linear()


@dataclass(frozen=True)
class Linear(Profile):
    """``T(t) = t``."""

    def value(self, t, side=0):
        return _out(np.asarray(t, dtype=float) * 1.0, t)

    def derivative(self):
        return 1.0, Const()


@dataclass(frozen=True)
class Rect(Profile):
    """1 on ``[0, t1]``, 0 otherwise."""

    t1: float

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError("rect profile needs t1 > 0")

    def value(self, t, side=0):
        return _out(_window(t, self.t1, side).astype(float), t)

    def breakpoints(self):
        return (0.0, float(self.t1))

    def derivative(self):
        return 0.0, None

    def jumps(self):
        return ((0.0, 1.0), (float(self.t1), -1.0))


@dataclass(frozen=True)
class Sinusoid(Profile):
    """``sin(omega t + phase)`` on ``[0, t1]``, 0 otherwise."""

    omega: float
    t1: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError("sinusoid profile needs t1 > 0")

    def value(self, t, side=0):
        ta = np.asarray(t, dtype=float)
        return _out(np.where(_window(ta, self.t1, side), np.sin(self.omega * ta + self.phase), 0.0), t)

    def breakpoints(self):
        return (0.0, float(self.t1)) if math.isfinite(self.t1) else (0.0,)

    def derivative(self):
        return float(self.omega), Sinusoid(self.omega, self.t1, self.phase + math.pi / 2)

    def jumps(self):
        out = []
        start = math.sin(self.phase)
        if abs(start) > _JUMP_TOL:
            out.append((0.0, start))
        if math.isfinite(self.t1):
            end = math.sin(self.omega * self.t1 + self.phase)
            if abs(end) > _JUMP_TOL:
                out.append((float(self.t1), -end))
        return tuple(out)


@dataclass(frozen=True)
class Integral(Profile):
    """Running integral ``int_0^t base(s) ds``; its derivative is ``base`` exactly."""

    base: Profile

    def value(self, t, side=0):
        ta = np.asarray(t, dtype=float)
        b = self.base
        if isinstance(b, Const):
            v = np.where(ta >= 0, ta, 0.0)
        elif isinstance(b, Rect):
            v = np.clip(ta, 0.0, b.t1)
        elif isinstance(b, Sinusoid):
            tc = np.clip(ta, 0.0, b.t1)
            if b.omega == 0:
                v = tc * math.sin(b.phase)
            else:
                v = (math.cos(b.phase) - np.cos(b.omega * tc + b.phase)) / b.omega
        else:
            raise NotImplementedError(f"no closed-form integral of {b!r}")
        return _out(v, t)

    def breakpoints(self):
        return self.base.breakpoints()

    def derivative(self):
        return 1.0, self.base


@dataclass(frozen=True)
class Product(Profile):
    """Pointwise product of two profiles (quadratic vector-potential terms)."""

    a: Profile
    b: Profile

    @classmethod
    def of(cls, a, b):
        return cls(*sorted((a, b), key=lambda p: p.sort_key()))

    def value(self, t, side=0):
        return self.a.value(t, side) * self.b.value(t, side)

    def breakpoints(self):
        return tuple(sorted(set(self.a.breakpoints()) | set(self.b.breakpoints())))


def support_end(profile: Profile) -> float:
    """Last breakpoint of a profile, or 0 when it has none."""
    bp = profile.breakpoints()
    return max(bp) if bp else 0.0


def min_pulse_length(profiles) -> float | None:
    """Shortest positive breakpoint among ``profiles`` (the pulse-duration scale)."""
    pos = [b for p in profiles for b in p.breakpoints() if b > 0 and math.isfinite(b)]
    return min(pos) if pos else None


def from_dict(d: dict) -> Profile:
    """Build a profile from a config mapping such as ``{"kind": "rect", "t1": 2.0}``."""
    kind = d.get("kind")
    if kind == "const":
        return Const()
    if kind == "linear":
        return Linear()
    if kind == "rect":
        return Rect(float(d["t1"]))
    if kind == "sinusoid":
        return Sinusoid(float(d["omega"]), float(d["t1"]), float(d.get("phase", 0.0)))
    if kind == "integral":
        return Integral(from_dict(d["base"]))
    raise ValueError(f"unknown profile kind {kind!r}")


def to_dict(p: Profile) -> dict:
    if isinstance(p, Const):
        return {"kind": "const"}
    if isinstance(p, Linear):
        return {"kind": "linear"}
    if isinstance(p, Rect):
        return {"kind": "rect", "t1": p.t1}
    if isinstance(p, Sinusoid):
        return {"kind": "sinusoid", "omega": p.omega, "t1": p.t1, "phase": p.phase}
    if isinstance(p, Integral):
        return {"kind": "integral", "base": to_dict(p.base)}
    raise ValueError(f"cannot serialize {p!r}")
