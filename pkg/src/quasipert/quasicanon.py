"""Perturbation theory for expectation values of motion invariants.

Observables are polynomials of degree <= 2 in the unperturbed variables
``(q, v)`` with ``v = p0/m``.  Their perturbation-induced rate of change is
expressed through the physical fields only:

    dL/dt = (Q/m) dL/dv_i * E_i + (Q/mc) eps_ijl dL/dv_i * B_l * v_j

with ``*`` the symmetrized product, nested from the left.  Expectations are
accumulated step by step over unperturbed states.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import (DegreeError, DimensionMismatchError, InadmissibleObservableError,
                     NumericalPolicyError)
from .fields import GaugeField, PhysicalFields, physical_fields, poly_operator, terms_operator
from .hilbert import Basis, Constants, Operator, State, commutator_bracket, sym_product, zero
from .polynomial import Poly
from .profiles import min_pulse_length
from .quadrature import time_grid

INVARIANCE_TOL = 1e-10
OBSERVABLE_DEGREE_CAP = 2
ELECTRIC, MAGNETIC = "electric", "magnetic"


def _levi(i, j, l):
    if len({i, j, l}) < 3:
        return 0
    return 1 if (i, j, l) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


@dataclass(frozen=True)
class ObservableSpec:
    """Observable ``L(q, v)`` as a polynomial over ``(q_1..q_d, v_1..v_d)``."""

    name: str
    poly: Poly

    def __post_init__(self):
        if self.poly.nvars not in (2, 4):
            raise DimensionMismatchError("observable polynomials live on (q, v) of a 1D or 2D system")
        if self.poly.degree > OBSERVABLE_DEGREE_CAP:
            raise DegreeError(f"observable {self.name!r} has degree {self.poly.degree} > {OBSERVABLE_DEGREE_CAP}")

    @property
    def ndim(self) -> int:
        return self.poly.nvars // 2

    @classmethod
    def from_terms(cls, name, ndim, terms):
        """``terms``: iterable of ``(coefficient, exponent tuple over (q..., v...))``."""
        return cls(name, Poly(2 * ndim, [(tuple(e), float(c)) for c, e in terms]))

    def dv(self, i) -> Poly:
        """Formal derivative with respect to ``v_i``."""
        return self.poly.derivative(self.ndim + i)


def energy_spec(basis: Basis) -> ObservableSpec:
    """``m v^2/2`` plus the oscillator potential; coincides with ``H0``."""
    d, m, w = basis.ndim, basis.constants.mass, basis.omega0
    terms = []
    for i in range(d):
        e = [0] * (2 * d)
        e[d + i] = 2
        terms.append((m / 2, e))
        e = [0] * (2 * d)
        e[i] = 2
        terms.append((m * w**2 / 2, e))
    return ObservableSpec.from_terms("energy", d, terms)


def zeta_spec(basis: Basis) -> ObservableSpec:
    """z-component of angular momentum ``m (x v_y - y v_x)``."""
    if basis.ndim != 2:
        raise DimensionMismatchError("zeta is defined for planar systems")
    m = basis.constants.mass
    return ObservableSpec.from_terms("zeta", 2, [(m, (1, 0, 0, 1)), (-m, (0, 1, 1, 0))])


def coordinate_spec(ndim: int, axis: int = 0, velocity: bool = False) -> ObservableSpec:
    e = [0] * (2 * ndim)
    e[axis + (ndim if velocity else 0)] = 1
    name = ("v" if velocity else "") + "xy"[axis]
    return ObservableSpec.from_terms(name, ndim, [(1.0, e)])


def catalog(name: str, basis: Basis) -> ObservableSpec:
    """Named observables: ``energy``, ``zeta``, ``x``, ``y``, ``vx``, ``vy``."""
    if name == "energy":
        return energy_spec(basis)
    if name in ("zeta", "Lz"):
        return zeta_spec(basis)
    if name in ("x", "y", "vx", "vy"):
        axis = "xy".index(name[-1])
        if axis >= basis.ndim:
            raise DimensionMismatchError(f"observable {name!r} on a {basis.ndim}D basis")
        return coordinate_spec(basis.ndim, axis, name.startswith("v"))
    raise KeyError(f"unknown observable {name!r}")


def _poly_op(poly: Poly, basis: Basis) -> Operator:
    result = zero(basis.dim)
    for exps, coef in poly.items():
        result = result + basis.monomial(exps) * coef
    return result


def build_observable(spec: ObservableSpec, basis: Basis) -> Operator:
    """Promote an observable spec to a hermitian matrix."""
    if spec.ndim != basis.ndim:
        raise DimensionMismatchError(f"{spec.ndim}D observable on a {basis.ndim}D basis")
    return Operator(_poly_op(spec.poly, basis).matrix, spec.name, True)


def xi_operator(basis: Basis) -> Operator:
    """Planar squared angular momentum ``Lz * Lz`` (operator only; degree 4 in ``(q, v)``)."""
    if basis.Lz is None:
        raise DimensionMismatchError("xi needs a planar basis")
    return Operator(sym_product(basis.Lz, basis.Lz).matrix, "xi", True)


def verify_unperturbed_invariance(L: Operator, H0: Operator, constants: Constants | None = None,
                                  interior_dim: int | None = None) -> float:
    """Scaled commutator norm ``hbar ||{L, H0}|| / (||L|| ||H0||)`` on the interior block.

    Values below ``1e-10`` certify ``L`` as an unperturbed motion invariant.
    """
    n = interior_dim or L.dim
    hbar = (constants or Constants()).hbar
    br = commutator_bracket(L, H0, constants).block(n)
    scale = np.linalg.norm(L.block(n), 2) * np.linalg.norm(H0.block(n), 2)
    if scale == 0:
        return 0.0
    return float(hbar * np.linalg.norm(br, 2) / scale)


def _residual(spec, basis):
    return verify_unperturbed_invariance(build_observable(spec, basis), basis.H0,
                                         basis.constants, basis.interior_dim)


def _as_physical(fields, basis):
    if isinstance(fields, GaugeField):
        raise TypeError("pass PhysicalFields (see fields.physical_fields); potentials are not accepted")
    if not isinstance(fields, PhysicalFields):
        raise TypeError(f"expected PhysicalFields, got {type(fields).__name__}")
    if fields.ndim != basis.ndim:
        raise DimensionMismatchError(f"{fields.ndim}D fields on a {basis.ndim}D basis")
    return fields


def _unit_terms(i: int, exps: tuple, fields: PhysicalFields, basis: Basis) -> list:
    """Rate contributions of the monomial ``exps`` standing in the ``dL/dv_i`` slot.

    Returns ``[(kind, profile, Operator), ...]`` with unit monomial coefficient.
    """
    cst = basis.constants
    Q, m, c = cst.charge, cst.mass, cst.c_light
    d = basis.ndim
    M = basis.monomial(exps)
    out = []
    for term in fields.E[i]:
        out.append((ELECTRIC, term.profile, sym_product(M, poly_operator(term.poly, basis)) * (Q / m)))
    for l, comp in enumerate(fields.B):
        for term in comp:
            Bop = None
            for j in range(d):
                e = _levi(i, j, l)
                if not e:
                    continue
                Bop = Bop or poly_operator(term.poly, basis)
                op = sym_product(sym_product(M, Bop), basis.v[j]) * (e * Q / (m * c))
                out.append((MAGNETIC, term.profile, op))
    return out


@dataclass(frozen=True, eq=False)
class RateOperator:
    """``dL/dt`` as separable ``(profile, Operator)`` terms, split by field type."""

    electric: tuple
    magnetic: tuple
    dim: int

    @staticmethod
    def _sum(terms, t, side):
        acc = None
        for prof, op in terms:
            v = prof.value(t, side)
            if v:
                acc = op.matrix * v if acc is None else acc + op.matrix * v
        return acc

    def _part(self, terms, t, side, label):
        acc = self._sum(terms, t, side)
        if acc is None:
            acc = np.zeros((self.dim, self.dim))
        return Operator(acc, label, True)

    def electric_part(self, t, side=0) -> Operator:
        return self._part(self.electric, t, side, "dL/dt[e]")

    def magnetic_part(self, t, side=0) -> Operator:
        return self._part(self.magnetic, t, side, "dL/dt[m]")

    def total(self, t, side=0) -> Operator:
        return self._part(self.electric + self.magnetic, t, side, "dL/dt")

    def at(self, t, side=0) -> Operator:
        return self.total(t, side)

    def profiles(self) -> tuple:
        return tuple(dict.fromkeys(p for p, _ in self.electric + self.magnetic))


def rate_operator(spec: ObservableSpec, fields: PhysicalFields, basis: Basis,
                  check_admissible: bool = True) -> RateOperator:
    """Rate operator of ``spec`` under ``fields``, built from unperturbed operators."""
    fields = _as_physical(fields, basis)
    if spec.ndim != basis.ndim:
        raise DimensionMismatchError(f"{spec.ndim}D observable on a {basis.ndim}D basis")
    if check_admissible:
        res = _residual(spec, basis)
        if res > INVARIANCE_TOL:
            raise InadmissibleObservableError(
                f"{spec.name!r} is not an unperturbed invariant (residual {res:.3e})")
    groups = {ELECTRIC: defaultdict(lambda: zero(basis.dim)), MAGNETIC: defaultdict(lambda: zero(basis.dim))}
    for i in range(basis.ndim):
        for exps, coef in spec.dv(i).items():
            for kind, prof, op in _unit_terms(i, exps, fields, basis):
                groups[kind][prof] = groups[kind][prof] + op * coef
    pack = lambda g: tuple((p, Operator(op.matrix, "rate", True)) for p, op in g.items())  # noqa: E731
    return RateOperator(pack(groups[ELECTRIC]), pack(groups[MAGNETIC]), basis.dim)


@dataclass(frozen=True, eq=False)
class ExpectationTrajectory:
    """``<L(t)>`` on a time grid, with the electric and magnetic contributions."""

    times: np.ndarray
    values: np.ndarray
    observable: str
    electric: np.ndarray
    magnetic: np.ndarray
    rule: str = "left"

    @property
    def final(self) -> float:
        return float(self.values[-1])


def check_dt_policy(dt, profiles):
    """Quasi-canonical stepping policy: ``dt <= t1/100`` for pulsed fields."""
    t1 = min_pulse_length(profiles)
    if t1 is not None and dt > t1 / 100 * (1 + 1e-12):
        raise NumericalPolicyError("quasicanon_dt", f"dt={dt} exceeds t1/100={t1 / 100}")


def _expect_series(Phi, op: Operator) -> np.ndarray:
    vals = np.sum((Phi.conj() @ op.matrix) * Phi, axis=1)
    scale = np.max(np.abs(vals), initial=0.0)
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-10 * max(scale, 1.0):
        raise ValueError("rate expectation is not real; operator not hermitian?")
    return vals.real


def _flow_images(ndim, omega, t, backward):
    """Images of ``(q, v)`` under the free oscillator flow by ``-t`` (backward) or ``+t``."""
    cos, sin = np.cos(omega * t), np.sin(omega * t)
    sgn = -1.0 if backward else 1.0
    n = 2 * ndim
    images = []
    for i in range(ndim):
        images.append(Poly(n, [(_unit(n, i), cos), (_unit(n, ndim + i), sgn * sin / omega)]))
    for i in range(ndim):
        images.append(Poly(n, [(_unit(n, ndim + i), cos), (_unit(n, i), -sgn * omega * sin)]))
    return images


def _unit(n, k):
    e = [0] * n
    e[k] = 1
    return tuple(e)


def evolve_expectation(spec: ObservableSpec, fields: PhysicalFields, basis: Basis, psi0: State,
                       T: float, dt: float, rule: str = "left", transport: str = "auto",
                       enforce_policy: bool = True) -> ExpectationTrajectory:
    """Accumulate ``<L(t)>`` step by step over unperturbed evolution.

    Each step adds ``<phi(s)| dL/dt (s) |phi(s)> h`` with
    ``phi(s) = exp(-i H0 s / hbar) psi0`` and ``s`` the left end (``rule="left"``)
    or the midpoint (``rule="midpoint"``) of the step.

    Observables that are not unperturbed invariants are handled by expanding
    ``L`` over the explicitly time-dependent invariants ``b(Phi_{-t}(q, v))``
    of the free oscillator, where ``b`` runs over monomials (``transport="auto"``).
    ``transport="always"`` forces that route even for invariants.
    """
    fields = _as_physical(fields, basis)
    if psi0.dim != basis.dim:
        raise DimensionMismatchError("initial state and basis dimensions differ")
    if rule not in ("left", "midpoint"):
        raise ValueError(f"unknown step rule {rule!r}")
    if enforce_policy:
        check_dt_policy(dt, fields.profiles())
    cst = basis.constants
    bps = sorted({b for p in fields.profiles() for b in p.breakpoints()})
    times = time_grid(T, dt, bps)
    h = np.diff(times)
    if rule == "left":
        s, side = times[:-1], +1
    else:
        s, side = 0.5 * (times[:-1] + times[1:]), 0
    c0 = np.asarray(psi0.coeffs)
    Phi = c0[None, :] * np.exp(-1j * np.outer(s, basis.energies) / cst.hbar)

    invariant = transport != "always" and _residual(spec, basis) <= INVARIANCE_TOL
    if transport not in ("auto", "always"):
        raise ValueError(f"unknown transport mode {transport!r}")

    d = basis.ndim
    if invariant:
        # single invariant J = L with unit time coefficient
        pieces = [(np.ones(len(times)), spec.poly, False)]
    else:
        L_w = spec.poly.substitute(_flow_images(d, basis.omega0, times, backward=False))
        pieces = []
        for exps, a in L_w.items():
            b = Poly(2 * d, {exps: 1.0})
            pieces.append((np.broadcast_to(a, times.shape), b, True))

    cache = {}

    def unit_series(i, exps):
        key = (i, exps)
        if key not in cache:
            el = np.zeros(len(s))
            mg = np.zeros(len(s))
            for kind, prof, op in _unit_terms(i, exps, fields, basis):
                ser = _expect_series(Phi, op) * prof.value(s, side)
                if kind == ELECTRIC:
                    el += ser
                else:
                    mg += ser
            cache[key] = (el, mg)
        return cache[key]

    values = np.zeros(len(times))
    elec = np.zeros(len(times))
    magn = np.zeros(len(times))
    for a, b, moving in pieces:
        J = b.substitute(_flow_images(d, basis.omega0, s, backward=True)) if moving else b
        J0 = _expect_series(c0[None, :], _poly_op(b, basis))[0]
        re = np.zeros(len(s))
        rm = np.zeros(len(s))
        for i in range(d):
            for exps, coef in J.derivative(d + i).items():
                el, mg = unit_series(i, exps)
                re += coef * el
                rm += coef * mg
        ce = np.concatenate(([0.0], np.cumsum(re * h)))
        cm = np.concatenate(([0.0], np.cumsum(rm * h)))
        values += a * (J0 + ce + cm)
        elec += a * ce
        magn += a * cm
    return ExpectationTrajectory(times, values, spec.name, elec, magn, rule)


def poisson_form_check(spec: ObservableSpec, field: GaugeField, basis: Basis, t: float,
                       side: int = 0) -> float:
    """Interior-block norm of the bracket form of the rate minus the field form.

    The bracket form, with ``{f, g} = [f, g]/(i hbar)`` over ``(q, p0)``, is

        Q {L, Phi1} + sum_i {L, q_i} * (Q/c) dA_i/dt
          + (Q/c) sum_i ({L, q_i} * {A_i, H0} - {L, A_i} * {q_i, H0}).
    """
    cst = basis.constants
    Q, c = cst.charge, cst.c_light
    if field.ndim != basis.ndim:
        raise DimensionMismatchError(f"{field.ndim}D field on a {basis.ndim}D basis")
    br = lambda f, g: commutator_bracket(f, g, cst)  # noqa: E731
    L = build_observable(spec, basis)
    H0 = basis.H0
    lhs = br(L, terms_operator(field.phi, basis, t, side)) * Q
    for i, comp in enumerate(field.A):
        if not comp:
            continue
        qi = basis.q[i]
        Ai = terms_operator(comp, basis, t, side)
        dA = zero(basis.dim)
        for term in comp:
            s, dprof = term.profile.derivative()
            if dprof is not None and s != 0:
                dA = dA + poly_operator(term.poly, basis) * (s * dprof.value(t, side))
        Lq = br(L, qi)
        lhs = lhs + sym_product(Lq, dA) * (Q / c)
        lhs = lhs + (sym_product(Lq, br(Ai, H0)) - sym_product(br(L, Ai), br(qi, H0))) * (Q / c)
    rhs = rate_operator(spec, physical_fields(field, cst), basis, check_admissible=False).total(t, side)
    n = basis.interior_dim
    return float(np.linalg.norm(lhs.block(n) - rhs.block(n), 2))


__all__ = [
    "ObservableSpec", "RateOperator", "ExpectationTrajectory", "energy_spec", "zeta_spec",
    "coordinate_spec", "catalog", "build_observable", "xi_operator",
    "verify_unperturbed_invariance", "rate_operator", "evolve_expectation", "poisson_form_check",
]
