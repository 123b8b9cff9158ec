"""Transition estimates from the small generator ``s`` and their consistency test.

For an observable ``L`` diagonal in the unperturbed eigenbasis,

    s_kk'(T) = exp(i(w_k' - w_k)T) / (i(L_k - L_k'))
               * int_0^T (dL/dt)_kk'(t) exp(i(w_k - w_k')t) dt

and ``P_kk' ~ |s_kk'|^2``.  Entries with ``L_k == L_k'`` are undefined and
are reported as such, never as zero.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleObservableError, UndefinedEntryError
from .fields import PhysicalFields
from .hilbert import Basis
from .quadrature import fourier_integral
from .quasicanon import ObservableSpec, build_observable, rate_operator

DIAGONAL_TOL = 1e-10
DEGENERACY_TOL = 1e-9
CONSISTENCY_RTOL = 1e-6
CONSISTENCY_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class SMatrixResult:
    """``s_kk'(T)`` over interior pairs; undefined entries hold NaN and ``defined`` is False."""

    s: np.ndarray
    defined: np.ndarray
    eigenvalues: np.ndarray
    observable: str
    T: float

    def entry(self, k, kp) -> complex:
        if not self.defined[k, kp]:
            raise UndefinedEntryError(
                f"s[{k},{kp}] undefined for {self.observable!r}: degenerate eigenvalues {self.eigenvalues[k]!r}")
        return complex(self.s[k, kp])


def observable_eigenvalues(spec: ObservableSpec, basis: Basis) -> np.ndarray:
    """Diagonal of ``L`` on the interior block; rejects observables not diagonal there."""
    n = basis.interior_dim
    L = build_observable(spec, basis).block(n)
    off = L - np.diag(np.diag(L))
    scale = max(np.max(np.abs(L)), 1.0)
    if np.max(np.abs(off), initial=0.0) > DIAGONAL_TOL * scale:
        raise InadmissibleObservableError(
            f"{spec.name!r} is not diagonal in the unperturbed eigenbasis")
    return np.real(np.diag(L)).copy()


def s_matrix(spec: ObservableSpec, fields: PhysicalFields, basis: Basis, T: float,
             quadrature: str = "simpson") -> SMatrixResult:
    """Compute ``s_kk'(T)`` on the interior block.

    Integrals use the same quadrature routine as the first-order amplitudes.
    """
    n = basis.interior_dim
    Lk = observable_eigenvalues(spec, basis)
    rate = rate_operator(spec, fields, basis)
    w = basis.omegas[:n]
    dw = w[:, None] - w[None, :]
    flat = dw.ravel()
    integral = np.zeros((n, n), dtype=complex)
    for prof, op in rate.electric + rate.magnetic:
        block = op.block(n)
        if not np.any(block):
            continue
        integral += block * fourier_integral(prof, flat, T, method=quadrature).reshape(n, n)
    gap = Lk[:, None] - Lk[None, :]
    scale = max(np.max(np.abs(Lk)), 1.0)
    defined = np.abs(gap) > DEGENERACY_TOL * scale
    s = np.full((n, n), np.nan + 0j)
    s[defined] = (np.exp(-1j * dw * T)[defined] / (1j * gap[defined])) * integral[defined]
    return SMatrixResult(s, defined, Lk, spec.name, float(T))


def transition_probability_s(result: SMatrixResult, k: int, kp: int) -> float:
    """``|s_kk'(T)|^2`` for ``k != k'``."""
    if k == kp:
        raise ValueError("transition estimate needs k != k'")
    return abs(result.entry(k, kp)) ** 2


@dataclass(frozen=True)
class ConsistencyRow:
    k: int
    kp: int
    a_abs: float
    b_abs: float
    rel_diff: float
    verdict: str


def consistency_check(fields: PhysicalFields, basis: Basis, T: float, spec_a: ObservableSpec,
                      spec_b: ObservableSpec, quadrature: str = "simpson",
                      rtol: float = CONSISTENCY_RTOL, atol: float = CONSISTENCY_ATOL) -> list:
    """Compare ``|s|`` computed through two observables on pairs defined for both.

    ``rel_diff = |a - b| / max(a, b)`` (0 when both vanish); a pair is ``equal``
    when ``|a - b| <= atol + rtol * max(a, b)``.
    """
    ra = s_matrix(spec_a, fields, basis, T, quadrature)
    rb = s_matrix(spec_b, fields, basis, T, quadrature)
    rows = []
    n = basis.interior_dim
    for k in range(n):
        for kp in range(n):
            if k == kp or not (ra.defined[k, kp] and rb.defined[k, kp]):
                continue
            a, b = abs(ra.s[k, kp]), abs(rb.s[k, kp])
            big = max(a, b)
            rel = abs(a - b) / big if big > 0 else 0.0
            verdict = "equal" if abs(a - b) <= atol + rtol * big else "unequal"
            rows.append(ConsistencyRow(k, kp, float(a), float(b), float(rel), verdict))
    return rows


CONSISTENCY_COLUMNS = ("k", "k_prime", "obs_a_abs", "obs_b_abs", "rel_diff", "verdict")


def write_consistency_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONSISTENCY_COLUMNS)
        for r in rows:
            w.writerow([r.k, r.kp, f"{r.a_abs:.16e}", f"{r.b_abs:.16e}", f"{r.rel_diff:.16e}", r.verdict])


__all__ = [
    "SMatrixResult", "ConsistencyRow", "observable_eigenvalues", "s_matrix",
    "transition_probability_s", "consistency_check", "write_consistency_csv",
]
