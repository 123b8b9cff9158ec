"""Standard (coefficient-dynamics) time-dependent perturbation theory.

Coefficients ``C_n`` of the expansion over unperturbed eigenstates obey

    i hbar dC_n/dt = sum_k C_k (H1)_nk exp(i omega_nk t).

This module assembles ``H1`` from gauge potentials, integrates the coefficient
equations (RK4, plus the literal explicit-Euler scheme kept as a demonstration
of its norm violation), and evaluates first-order amplitudes by quadrature.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NumericalPolicyError
from .fields import GaugeField, GaugeFunction, gauge_transform, poly_operator
from .hilbert import Basis, Constants, Operator, State, sym_product, zero
from .profiles import Product, min_pulse_length
from .quadrature import fourier_integral, time_grid

LINEAR_A, QUADRATIC_A, SCALAR = "linear_A", "quadratic_A", "scalar"


@dataclass(frozen=True)
class HamiltonianTerm:
    kind: str
    profile: object
    operator: Operator


@dataclass(frozen=True, eq=False)
class PerturbingHamiltonian:
    """``H1(t) = sum_terms profile(t) * operator``, split by physical origin."""

    terms: tuple
    dim: int
    include_A2: bool = False

    def by_kind(self, kind) -> tuple:
        return tuple(t for t in self.terms if t.kind == kind)

    @property
    def linear_A_term(self):
        return self.by_kind(LINEAR_A)

    @property
    def quadratic_A_term(self):
        return self.by_kind(QUADRATIC_A)

    @property
    def scalar_term(self):
        return self.by_kind(SCALAR)

    def profiles(self) -> tuple:
        return tuple(dict.fromkeys(t.profile for t in self.terms))

    def breakpoints(self) -> tuple:
        return tuple(sorted({b for p in self.profiles() for b in p.breakpoints()}))

    def coefficients(self, t, side=0) -> np.ndarray:
        return np.array([term.profile.value(t, side) for term in self.terms], dtype=float)

    def matrix(self, t, side=0) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c, term in zip(self.coefficients(t, side), self.terms):
            if c:
                out += c * term.operator.matrix
        return out

    def __call__(self, t, side=0) -> Operator:
        return Operator(self.matrix(t, side), "H1", True)

    def element(self, n, k) -> np.ndarray:
        return np.array([term.operator.matrix[n, k] for term in self.terms])


def assemble_h1(field: GaugeField, basis: Basis, constants: Constants | None = None,
                include_A2: bool = False) -> PerturbingHamiltonian:
    """Build ``H1 = -(Q/mc) A1*p + (Q^2/2mc^2) A1^2 + Q Phi1``.

    The ``A1^2`` term is dropped unless ``include_A2`` is set.
    """
    constants = constants or basis.constants
    if field.ndim != basis.ndim:
        raise DimensionMismatchError(f"{field.ndim}D field on a {basis.ndim}D basis")
    Q, m, c = constants.charge, constants.mass, constants.c_light
    groups = defaultdict(lambda: zero(basis.dim))
    for i, comp in enumerate(field.A):
        for term in comp:
            op = sym_product(poly_operator(term.poly, basis), basis.p0[i]) * (-Q / (m * c))
            groups[(LINEAR_A, term.profile)] = groups[(LINEAR_A, term.profile)] + op
        if include_A2:
            ops = [(t.profile, poly_operator(t.poly, basis)) for t in comp]
            for pa, oa in ops:
                for pb, ob in ops:
                    key = (QUADRATIC_A, Product.of(pa, pb))
                    groups[key] = groups[key] + sym_product(oa, ob) * (Q**2 / (2 * m * c**2))
    for term in field.phi:
        groups[(SCALAR, term.profile)] = groups[(SCALAR, term.profile)] + poly_operator(term.poly, basis) * Q
    terms = tuple(HamiltonianTerm(kind, prof, Operator(op.matrix, f"H1[{kind}]", True))
                  for (kind, prof), op in groups.items())
    return PerturbingHamiltonian(terms, basis.dim, include_A2)


def coefficient_rhs(t, coeffs, H1: PerturbingHamiltonian, basis: Basis, side: int = 0) -> np.ndarray:
    """Right-hand side ``dC/dt`` on the leading ``len(coeffs)`` basis states."""
    c = np.asarray(coeffs, dtype=complex)
    d = len(c)
    if d > basis.dim:
        raise DimensionMismatchError("more coefficients than basis states")
    phase = np.exp(1j * basis.omegas[:d] * t)
    H = H1.matrix(t, side)[:d, :d]
    return (-1j / basis.constants.hbar) * phase * (H @ (phase.conj() * c))


@dataclass(frozen=True, eq=False)
class CoefficientTrajectory:
    times: np.ndarray
    coeffs: np.ndarray
    method: str

    @property
    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.coeffs) ** 2, axis=1)

    def probability(self, n, index=-1) -> float:
        return float(abs(self.coeffs[index, n]) ** 2)


def _block_omega_max(basis, d):
    e = basis.energies[:d]
    return (e.max() - e.min()) / basis.constants.hbar


def check_dt_policy(dt, H1: PerturbingHamiltonian, basis: Basis, d: int):
    """Coefficient-integration policy: ``dt <= min(0.01/omega_max, t1/200)``."""
    limits = []
    w = _block_omega_max(basis, d)
    if w > 0:
        limits.append(0.01 / w)
    t1 = min_pulse_length(H1.profiles())
    if t1 is not None:
        limits.append(t1 / 200)
    if limits and dt > min(limits) * (1 + 1e-12):
        raise NumericalPolicyError("dirac_dt", f"dt={dt} exceeds min(0.01/omega_max, t1/200)={min(limits)}")


def _initial(initial, basis, d):
    if isinstance(initial, (int, np.integer)):
        basis.check_interior(int(initial))
        c = np.zeros(d, dtype=complex)
        c[int(initial)] = 1.0
        return c
    c = initial.coeffs if isinstance(initial, State) else np.asarray(initial, dtype=complex)
    if len(c) < d:
        raise DimensionMismatchError("initial coefficients shorter than the block")
    return np.array(c[:d], dtype=complex)


def integrate_coefficients(H1: PerturbingHamiltonian, basis: Basis, initial, T: float, dt: float,
                           method: str = "rk4", block: int | None = None,
                           enforce_policy: bool = True) -> CoefficientTrajectory:
    """Integrate the coefficient equations on the first ``block`` states (interior by default)."""
    d = basis.interior_dim if block is None else int(block)
    if enforce_policy and method == "rk4":
        check_dt_policy(dt, H1, basis, d)
    times = time_grid(T, dt, H1.breakpoints())
    c = _initial(initial, basis, d)
    out = np.empty((len(times), d), dtype=complex)
    out[0] = c
    f = lambda t, y, s=0: coefficient_rhs(t, y, H1, basis, s)  # noqa: E731
    for j in range(len(times) - 1):
        t, h = times[j], times[j + 1] - times[j]
        if method == "rk4":
            k1 = f(t, c, +1)
            k2 = f(t + h / 2, c + h / 2 * k1)
            k3 = f(t + h / 2, c + h / 2 * k2)
            k4 = f(t + h, c + h * k3, -1)
            c = c + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        elif method == "euler_demo":
            c = c + h * f(t, c, +1)
        else:
            raise ValueError(f"unknown method {method!r}")
        out[j + 1] = c
    return CoefficientTrajectory(times, out, method)


def euler_norm_demo(H1: PerturbingHamiltonian, basis: Basis, k: int, dt: float,
                    n_steps: int = 1, block: int | None = None) -> np.ndarray:
    """Norms ``||C||^2`` after each explicit step ``C <- C - (i/hbar) H1 e^{i w t} C dt``.

    Returns ``n_steps + 1`` values, the first being exactly 1.
    """
    traj = integrate_coefficients(H1, basis, k, n_steps * dt, dt, method="euler_demo",
                                  block=block, enforce_policy=False)
    return traj.norms


def first_order_amplitude(H1: PerturbingHamiltonian, basis: Basis, k: int, n: int, T: float,
                          quadrature: str = "simpson") -> complex:
    """``-(i/hbar) int_0^T (H1)_nk(t) exp(i omega_nk t) dt`` for ``n != k``."""
    if n == k:
        raise ValueError("first-order amplitude needs n != k")
    basis.check_interior(n, k)
    return complex(first_order_amplitudes(H1, basis, k, T, quadrature, finals=[n])[0])


def first_order_amplitudes(H1: PerturbingHamiltonian, basis: Basis, k: int, T: float,
                           quadrature: str = "simpson", finals=None) -> np.ndarray:
    """First-order amplitudes from state ``k`` to each final state (interior by default).

    The entry for ``n == k`` is the zeroth-order value 1.
    """
    basis.check_interior(k)
    finals = np.arange(basis.interior_dim) if finals is None else np.asarray(finals)
    w = basis.omegas[finals] - basis.omegas[k]
    amp = np.zeros(len(finals), dtype=complex)
    for term in H1.terms:
        elems = term.operator.matrix[finals, k]
        if not np.any(elems):
            continue
        amp += elems * fourier_integral(term.profile, w, T, method=quadrature)
    amp *= -1j / basis.constants.hbar
    amp[finals == k] = 1.0
    return amp


def transition_probability(H1, basis, k, n, T, quadrature="simpson") -> float:
    return abs(first_order_amplitude(H1, basis, k, n, T, quadrature)) ** 2


def gauge_sensitivity(field: GaugeField, f: GaugeFunction, basis: Basis, k: int, n: int, T: float,
                      include_A2: bool = False, quadrature: str = "simpson") -> tuple[float, float]:
    """First-order ``P_nk`` in the original and in the ``f``-transformed gauge."""
    other = gauge_transform(field, f, basis.constants)
    p0 = transition_probability(assemble_h1(field, basis, include_A2=include_A2), basis, k, n, T, quadrature)
    p1 = transition_probability(assemble_h1(other, basis, include_A2=include_A2), basis, k, n, T, quadrature)
    return p0, p1
