"""Reference solution: direct propagation of the Schrödinger equation.

Crank–Nicolson with midpoint field sampling is the default integrator; a
midpoint matrix-exponential variant is available for cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatchError, NumericalPolicyError
from .fields import GaugeFunction, poly_operator
from .hilbert import Basis, Constants, Operator, State
from .profiles import Const, Integral, Profile, Rect, Sinusoid, min_pulse_length
from .quadrature import exp_integral, time_grid

CRANK_NICOLSON = "crank_nicolson"
MIDPOINT_EXPONENTIAL = "midpoint_exponential"


@dataclass(frozen=True, eq=False)
class PropagationResult:
    times: np.ndarray
    states: np.ndarray
    method: str
    interior_dim: int | None = None

    @property
    def final(self) -> State:
        return State.normalized(self.states[-1])

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def check_dt_policy(dt, H0: Operator, profiles=(), hbar=1.0):
    """Oracle policy: ``dt <= min(0.05/omega_max, t1/200)``."""
    e = np.real(np.diag(H0.matrix))
    limits = []
    w = (e.max() - e.min()) / hbar
    if w > 0:
        limits.append(0.05 / w)
    t1 = min_pulse_length(profiles)
    if t1 is not None:
        limits.append(t1 / 200)
    if limits and dt > min(limits) * (1 + 1e-12):
        raise NumericalPolicyError("oracle_dt", f"dt={dt} exceeds min(0.05/omega_max, t1/200)={min(limits)}")


def propagate(H0: Operator, H1_of_t: Callable, psi0: State, T: float, dt: float,
              method: str = CRANK_NICOLSON, hbar: float = 1.0, breakpoints=(),
              enforce_policy: bool = True, hermitian_tol: float = 1e-10) -> PropagationResult:
    """Propagate ``psi0`` under ``H0 + H1(t)`` up to ``T``.

    Parameters
    ----------
    H1_of_t : callable
        ``t -> Operator | ndarray``.  A :class:`~quasipert.dirac.PerturbingHamiltonian`
        also works and additionally supplies its breakpoints, which are placed on
        grid nodes; steps whose field coefficients repeat reuse the same propagator.
    """
    if psi0.dim != H0.dim:
        raise DimensionMismatchError("initial state and H0 dimensions differ")
    profiles = H1_of_t.profiles() if hasattr(H1_of_t, "profiles") else ()
    if hasattr(H1_of_t, "breakpoints"):
        breakpoints = tuple(breakpoints) + tuple(H1_of_t.breakpoints())
    if enforce_policy:
        check_dt_policy(dt, H0, profiles, hbar)
    coeff = getattr(H1_of_t, "coefficients", None)
    times = time_grid(T, dt, breakpoints)
    dim = H0.dim
    eye = np.eye(dim)
    psi = np.array(psi0.coeffs)
    out = np.empty((len(times), dim), dtype=complex)
    out[0] = psi
    cache_key, U = None, None
    for j in range(len(times) - 1):
        h = times[j + 1] - times[j]
        tm = 0.5 * (times[j] + times[j + 1])
        key = (h, tuple(coeff(tm))) if coeff is not None else None
        if key is None or key != cache_key:
            h1 = H1_of_t(tm)
            h1 = h1.matrix if isinstance(h1, Operator) else np.asarray(h1)
            H = H0.matrix + h1
            if np.max(np.abs(H - H.conj().T)) > hermitian_tol * max(1.0, np.max(np.abs(H))):
                raise ValueError(f"H(t) not hermitian at t={tm}")
            a = 1j * h / (2 * hbar) * H
            if method == CRANK_NICOLSON:
                U = np.linalg.solve(eye + a, eye - a)
            elif method == MIDPOINT_EXPONENTIAL:
                U = sla.expm(-2 * a)
            else:
                raise ValueError(f"unknown method {method!r}")
            cache_key = key
        psi = U @ psi
        out[j + 1] = psi
    return PropagationResult(times, out, method)


def gauge_phase(f: GaugeFunction, basis: Basis, t: float) -> Operator:
    """Unitary ``exp(i Q f(q, t) / (hbar c))`` relating gauge-equivalent wavefunctions."""
    cst = basis.constants
    gen = np.zeros((basis.dim, basis.dim), dtype=complex)
    for term in f.terms:
        gen += poly_operator(term.poly, basis).matrix * term.profile.value(t)
    return Operator(sla.expm(1j * cst.charge / (cst.hbar * cst.c_light) * gen), "gauge_phase")


def exact_transition(prop: PropagationResult, n: int, basis: Basis | None = None,
                     phase: Operator | None = None, index: int = -1) -> float:
    """``|<n|psi(t)>|^2`` at ``times[index]``.

    ``phase``, when given, is the gauge unitary ``U_f`` at that time; the state is
    mapped back with ``U_f^dagger`` before projecting, which makes the result
    independent of the gauge used during propagation.
    """
    if basis is not None:
        basis.check_interior(n)
    psi = prop.states[index]
    if phase is not None:
        psi = phase.matrix.conj().T @ psi
    return float(abs(psi[n]) ** 2)


def exact_expectation(prop: PropagationResult, op: Operator) -> np.ndarray:
    """``<psi(t)|op|psi(t)>`` along the run; imaginary parts must be rounding noise."""
    S = prop.states
    vals = np.einsum("ti,ij,tj->t", S.conj(), op.matrix, S)
    scale = np.max(np.abs(vals), initial=0.0)
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-10 * scale + 1e-12:
        raise ValueError("expectation has a non-negligible imaginary part; operator not hermitian?")
    return vals.real


def profile_fourier_closed_form(profile: Profile, omega: float, T: float) -> complex:
    """``int_0^T profile(t) exp(i omega t) dt`` in closed form."""
    if isinstance(profile, Const):
        return exp_integral(omega, 0.0, T)
    if isinstance(profile, Rect):
        return exp_integral(omega, 0.0, min(T, profile.t1))
    if isinstance(profile, Sinusoid):
        end = min(T, profile.t1)
        up = np.exp(1j * profile.phase) * exp_integral(omega + profile.omega, 0.0, end)
        down = np.exp(-1j * profile.phase) * exp_integral(omega - profile.omega, 0.0, end)
        return (up - down) / 2j
    raise NotImplementedError(f"no closed form for {profile!r}")


def forced_oscillator_reference(E0: float, profile: Profile, omega0: float,
                                constants: Constants | None = None, T: float | None = None,
                                exact: bool = False) -> float:
    """Ground-to-first-excited probability of a 1D oscillator driven by ``E0 * profile(t)``.

    With ``H = H0 - Q E0 T(t) x`` the ground state evolves into a coherent state
    of amplitude ``alpha = (Q E0/hbar) sqrt(hbar/2 m omega0) int_0^T T(t) e^{i omega0 t} dt``.
    The first-order result is ``|alpha|^2``; ``exact=True`` returns the Poisson
    weight ``|alpha|^2 exp(-|alpha|^2)``.
    """
    cst = constants or Constants()
    if T is None:
        T = max(profile.breakpoints(), default=None)
        if T is None:
            raise ValueError("horizon T required for profiles without finite support")
    if isinstance(profile, Integral):
        raise NotImplementedError("unsupported profile for the forced-oscillator reference")
    x01 = math.sqrt(cst.hbar / (2 * cst.mass * omega0))
    alpha = cst.charge * E0 / cst.hbar * x01 * profile_fourier_closed_form(profile, omega0, T)
    p = abs(alpha) ** 2
    return p * math.exp(-p) if exact else p
