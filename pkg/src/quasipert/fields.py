"""Electromagnetic perturbations as polynomial gauge potentials.

A field is a sum of separable terms ``poly(x) * profile(t)``.  Gauge algebra is
done on coefficients, so the identities it must satisfy hold exactly; error
only enters when a polynomial is promoted to a matrix on a truncated basis.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .errors import DegreeError, DimensionMismatchError, ImpulsiveFieldError
from .hilbert import Basis, Constants, Operator, zero
from .polynomial import Poly
from .profiles import Profile

DEGREE_CAP = 2
AXES = "xyz"


@dataclass(frozen=True)
class FieldTerm:
    poly: Poly
    profile: Profile

    def scaled(self, factor) -> "FieldTerm":
        return FieldTerm(self.poly * factor, self.profile)


def _terms(ndim, items) -> tuple:
    out = []
    for it in items:
        if isinstance(it, FieldTerm):
            term = it
        else:
            poly, prof = it
            if not isinstance(poly, Poly):
                poly = Poly(ndim, poly)
            term = FieldTerm(poly, prof)
        if term.poly.nvars != ndim:
            raise DimensionMismatchError(f"polynomial over {term.poly.nvars} variables in a {ndim}D field")
        if term.poly.degree > DEGREE_CAP:
            raise DegreeError(f"field polynomial degree {term.poly.degree} exceeds {DEGREE_CAP}")
        out.append(term)
    return tuple(out)


@dataclass(frozen=True)
class GaugeField:
    """Perturbing potentials ``(A1, Phi1)``; each a tuple of separable terms.

    Terms are kept unmerged so that gauge cancellations stay exact.
    """

    ndim: int
    A: tuple
    phi: tuple

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise ValueError("fields are supported in 1 or 2 spatial dimensions")
        A = tuple(self.A) + ((),) * (self.ndim - len(self.A))
        if len(A) != self.ndim:
            raise DimensionMismatchError("one vector-potential component per axis")
        object.__setattr__(self, "A", tuple(_terms(self.ndim, comp) for comp in A))
        object.__setattr__(self, "phi", _terms(self.ndim, self.phi))

    @classmethod
    def zero(cls, ndim):
        return cls(ndim, (), ())

    @classmethod
    def uniform_electric(cls, E0, profile: Profile, ndim=1, axis=0):
        """Scalar-gauge uniform field ``E = E0 T(t) e_axis`` via ``Phi1 = -E0 x T(t)``."""
        poly = Poly.variable(ndim, axis, -float(E0))
        return cls(ndim, (), (FieldTerm(poly, profile),))

    @classmethod
    def symmetric_magnetic(cls, eps, profile: Profile):
        """Uniform ``B = eps T(t) e_z`` in the symmetric gauge ``A = eps T (-y/2, x/2)``."""
        ax = FieldTerm(Poly.variable(2, 1, -0.5 * eps), profile)
        ay = FieldTerm(Poly.variable(2, 0, 0.5 * eps), profile)
        return cls(2, ((ax,), (ay,)), ())

    def profiles(self) -> tuple:
        out = [t.profile for comp in self.A for t in comp] + [t.profile for t in self.phi]
        return tuple(dict.fromkeys(out))

    def __add__(self, other: "GaugeField"):
        if other.ndim != self.ndim:
            raise DimensionMismatchError("cannot add fields of different dimension")
        return GaugeField(self.ndim, tuple(a + b for a, b in zip(self.A, other.A)),
                          self.phi + other.phi)

    def scaled(self, factor) -> "GaugeField":
        return GaugeField(self.ndim, tuple(tuple(t.scaled(factor) for t in c) for c in self.A),
                          tuple(t.scaled(factor) for t in self.phi))


@dataclass(frozen=True)
class GaugeFunction:
    """Gauge function ``f(x, t) = sum_j g_j(x) h_j(t)``."""

    ndim: int
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", _terms(self.ndim, self.terms))

    @classmethod
    def single(cls, poly: Poly, profile: Profile):
        return cls(poly.nvars, (FieldTerm(poly, profile),))

    def profiles(self):
        return tuple(dict.fromkeys(t.profile for t in self.terms))


@dataclass(frozen=True)
class Impulse:
    """Delta-function field contribution ``weight(x) * delta(t - time)`` that was dropped."""

    kind: str
    component: int
    time: float
    weight: Poly


@dataclass(frozen=True)
class PhysicalFields:
    """Gauge-invariant fields ``E1`` (``ndim`` components) and ``B1`` (x, y, z).

    Always produced by :func:`physical_fields`; terms are canonical (merged,
    zero-free, sorted), so equal physics compares equal.
    """

    ndim: int
    E: tuple
    B: tuple
    impulses: tuple = ()

    def profiles(self) -> tuple:
        out = [t.profile for comp in self.E + self.B for t in comp]
        return tuple(dict.fromkeys(out))

    @property
    def is_zero(self) -> bool:
        return not any(self.E) and not any(self.B)

    def __add__(self, other):
        if other.ndim != self.ndim:
            raise DimensionMismatchError("cannot add fields of different dimension")
        tagged = [("E", i, t) for f in (self, other) for i, c in enumerate(f.E) for t in c]
        tagged += [("B", l, t) for f in (self, other) for l, c in enumerate(f.B) for t in c]
        return _canonical(self.ndim, tagged, self.impulses + other.impulses)

    def scaled(self, factor):
        return _canonical(self.ndim, [("E", i, t.scaled(factor)) for i, c in enumerate(self.E) for t in c]
                          + [("B", l, t.scaled(factor)) for l, c in enumerate(self.B) for t in c],
                          self.impulses)


def _canonical(ndim, tagged, impulses=()) -> PhysicalFields:
    groups = defaultdict(list)
    for kind, comp, term in tagged:
        for exps, coef in term.poly.terms.items():
            groups[(kind, comp, term.profile, exps)].append(coef)
    return _assemble(ndim, groups, impulses)


def _assemble(ndim, groups, impulses) -> PhysicalFields:
    merged = defaultdict(dict)
    for (kind, comp, prof, exps), coefs in groups.items():
        total = math.fsum(coefs)
        if total != 0.0:
            merged[(kind, comp, prof)][exps] = total
    E = [[] for _ in range(ndim)]
    B = [[], [], []]
    for (kind, comp, prof), terms in merged.items():
        (E if kind == "E" else B)[comp].append(FieldTerm(Poly(ndim, terms), prof))
    key = lambda t: (t.profile.sort_key(), repr(t.poly))  # noqa: E731
    return PhysicalFields(ndim, tuple(tuple(sorted(c, key=key)) for c in E),
                          tuple(tuple(sorted(c, key=key)) for c in B), tuple(impulses))


def gauge_transform(field: GaugeField, f: GaugeFunction,
                    constants: Constants | None = None) -> GaugeField:
    """Return ``(A1 + grad f, Phi1 - (1/c) df/dt)``."""
    constants = constants or Constants()
    if f.ndim != field.ndim:
        raise DimensionMismatchError("gauge function and field dimensions differ")
    c = constants.c_light
    A = [list(comp) for comp in field.A]
    phi = list(field.phi)
    for term in f.terms:
        if term.profile.jumps():
            raise ImpulsiveFieldError(f"gauge function profile {term.profile!r} is discontinuous")
        for i in range(field.ndim):
            g = term.poly.derivative(i)
            if not g.is_zero():
                A[i].append(FieldTerm(g, term.profile))
        s, dprof = term.profile.derivative()
        if dprof is not None and s != 0:
            # scale first, then divide by c: keeps exact cancellation in physical_fields
            poly = Poly(field.ndim, {e: -((coef * s) / c) for e, coef in term.poly.terms.items()})
            phi.append(FieldTerm(poly, dprof))
    return GaugeField(field.ndim, tuple(tuple(a) for a in A), tuple(phi))


def physical_fields(field: GaugeField, constants: Constants | None = None,
                    strict: bool = False) -> PhysicalFields:
    """Derive ``E1 = -grad Phi1 - (1/c) dA1/dt`` and ``B1 = curl A1``.

    Delta-function pieces of ``dA1/dt`` (profile jumps) are not representable;
    they are listed in ``impulses`` and omitted from ``E``, or raise when
    ``strict`` is set.
    """
    constants = constants or Constants()
    c = constants.c_light
    d = field.ndim
    groups = defaultdict(list)
    impulses = []
    for term in field.phi:
        for i in range(d):
            for exps, coef in term.poly.derivative(i).terms.items():
                groups[("E", i, term.profile, exps)].append(-coef)
    for i, comp in enumerate(field.A):
        for term in comp:
            for time, jump in term.profile.jumps():
                if strict:
                    raise ImpulsiveFieldError(
                        f"dA{AXES[i]}/dt of {term.profile!r} has a delta at t={time}")
                impulses.append(Impulse("E", i, time, term.poly * (-jump / c)))
            s, dprof = term.profile.derivative()
            if dprof is None or s == 0:
                continue
            for exps, coef in term.poly.terms.items():
                groups[("E", i, dprof, exps)].append(-((coef * s) / c))
    if d == 2:
        for sign, comp, axis in ((1.0, 1, 0), (-1.0, 0, 1)):
            for term in field.A[comp]:
                for exps, coef in term.poly.derivative(axis).terms.items():
                    groups[("B", 2, term.profile, exps)].append(sign * coef)
    return _assemble(d, groups, impulses)


def poly_operator(poly: Poly, basis: Basis) -> Operator:
    """Promote a coordinate polynomial to a hermitian matrix (time independent)."""
    if poly.nvars != basis.ndim:
        raise DimensionMismatchError(f"{poly.nvars}D polynomial on a {basis.ndim}D basis")
    result = zero(basis.dim)
    for exps, coef in poly.items():
        result = result + basis.monomial(exps) * coef
    return Operator(result.matrix, repr(poly), True)


def as_operator(poly: Poly, profile: Profile, basis: Basis, t: float, side: int = 0) -> Operator:
    """Matrix of ``poly(q) * profile(t)``; time enters only through the scalar profile."""
    return poly_operator(poly, basis) * profile.value(t, side)


def terms_operator(terms, basis: Basis, t: float, side: int = 0) -> Operator:
    result = zero(basis.dim)
    for term in terms:
        result = result + as_operator(term.poly, term.profile, basis, t, side)
    return result


__all__ = [
    "FieldTerm", "GaugeField", "GaugeFunction", "PhysicalFields", "Impulse",
    "gauge_transform", "physical_fields", "poly_operator", "as_operator", "terms_operator",
]
