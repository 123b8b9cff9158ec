"""Truncated oscillator bases and the operator algebra used everywhere else.

Two unperturbed systems are supported: the 1D harmonic oscillator and the
isotropic 2D oscillator in its circular (Lz-diagonal) eigenbasis.  All
operators are dense complex matrices on the full truncated basis; only the
*interior block* (total quantum number <= n_max - 2) is trusted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, InteriorIndexError

HO1D = "HO1D"
HO2D = "HO2D"
BASIS_BUFFER = 2


@dataclass(frozen=True)
class Constants:
    """Physical constants, natural units by default."""

    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0
    c_light: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "charge", "c_light"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on a truncated basis.

    Parameters
    ----------
    matrix : ndarray, shape (dim, dim)
    label : str
    hermitian_hint : bool
        Declares the operator hermitian; checked by :meth:`check_hermitian`.
    """

    matrix: np.ndarray
    label: str = ""
    hermitian_hint: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"operator matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def block(self, n: int) -> np.ndarray:
        return self.matrix[:n, :n]

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, f"({self.label})^+", self.hermitian_hint)

    def check_hermitian(self, n: int | None = None, rtol: float = 1e-12) -> bool:
        m = self.matrix if n is None else self.block(n)
        scale = np.max(np.abs(m)) if m.size else 0.0
        return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= rtol * scale)

    def _check(self, other: "Operator"):
        if other.dim != self.dim:
            raise DimensionMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix + other.matrix, f"{self.label}+{other.label}",
                            self.hermitian_hint and other.hermitian_hint)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix - other.matrix, f"{self.label}-{other.label}",
                            self.hermitian_hint and other.hermitian_hint)
        return NotImplemented

    def __neg__(self):
        return Operator(-self.matrix, f"-{self.label}", self.hermitian_hint)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        real = np.isrealobj(scalar) or np.imag(scalar) == 0
        return Operator(self.matrix * scalar, self.label, self.hermitian_hint and bool(real))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix @ other.matrix, f"{self.label}{other.label}")
        return self.matrix @ other

    def __repr__(self):
        return f"Operator({self.label!r}, dim={self.dim}, hermitian={self.hermitian_hint})"


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim), "1", True)


def zero(dim: int) -> Operator:
    return Operator(np.zeros((dim, dim)), "0", True)


def sym_product(f: Operator, g: Operator) -> Operator:
    """Symmetrized product ``(fg + gf)/2``."""
    f._check(g)
    m = 0.5 * (f.matrix @ g.matrix + g.matrix @ f.matrix)
    return Operator(m, f"{f.label}*{g.label}", f.hermitian_hint and g.hermitian_hint)


def commutator_bracket(f: Operator, g: Operator, constants: Constants | None = None) -> Operator:
    """Quantum Poisson bracket ``[f, g]/(i hbar)``."""
    f._check(g)
    hbar = (constants or Constants()).hbar
    m = (f.matrix @ g.matrix - g.matrix @ f.matrix) / (1j * hbar)
    return Operator(m, f"{{{f.label},{g.label}}}", f.hermitian_hint and g.hermitian_hint)


@dataclass(frozen=True, eq=False)
class Basis:
    """Truncated eigenbasis of an oscillator ``H0`` together with its operators.

    ``quantum_numbers`` holds ``(n,)`` for HO1D and ``(n_radial, m_ang)`` for
    HO2D, where the shell index is ``2*n_radial + |m_ang|``.
    """

    kind: str
    omega0: float
    n_max: int
    constants: Constants
    energies: np.ndarray
    shells: np.ndarray
    quantum_numbers: tuple
    interior_dim: int
    q: tuple
    p: tuple
    H0: Operator
    Lz: Operator | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def ndim(self) -> int:
        return len(self.q)

    @property
    def p0(self) -> tuple:
        # no unperturbed vector potential: p0 coincides with p
        return self.p

    @property
    def v(self) -> tuple:
        key = ("v",)
        if key not in self._cache:
            m = self.constants.mass
            self._cache[key] = tuple(Operator(pi.matrix / m, f"v{ax}", True)
                                     for pi, ax in zip(self.p, "xyz"))
        return self._cache[key]

    @property
    def omegas(self) -> np.ndarray:
        return self.energies / self.constants.hbar

    def index_of(self, *qn) -> int:
        return self.quantum_numbers.index(tuple(qn))

    def monomial(self, exps: Sequence[int]) -> Operator:
        """Operator for a monomial in ``(q_1..q_d, v_1..v_d)``.

        Factors are taken in variable order and combined by left-associated
        symmetrized products.  A length-``d`` exponent tuple means coordinates only.
        """
        exps = tuple(int(e) for e in exps)
        d = self.ndim
        if len(exps) == d:
            exps = exps + (0,) * d
        if len(exps) != 2 * d:
            raise DimensionMismatchError(f"monomial {exps} does not match a {d}D basis")
        if exps not in self._cache:
            factors = []
            for i, k in enumerate(exps):
                op = self.q[i] if i < d else self.v[i - d]
                factors.extend([op] * k)
            if not factors:
                result = identity(self.dim)
            else:
                result = factors[0]
                for f in factors[1:]:
                    result = sym_product(result, f)
            self._cache[exps] = result
        return self._cache[exps]

    def check_interior(self, *indices: int):
        for i in indices:
            if not 0 <= i < self.interior_dim:
                raise InteriorIndexError(
                    f"index {i} outside interior block [0, {self.interior_dim})")


def _ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


def build_basis(kind: str, omega0: float = 1.0, n_max: int = 10,
                constants: Constants | None = None) -> Basis:
    """Build a truncated oscillator basis and its position/momentum operators.

    Parameters
    ----------
    kind : {"HO1D", "HO2D"}
    omega0 : float
        Oscillator angular frequency.
    n_max : int
        Largest total quantum number kept.  Must be at least 4.
    constants : Constants, optional

    Returns
    -------
    Basis
    """
    constants = constants or Constants()
    if int(n_max) != n_max or n_max < 4:
        raise ValueError(f"n_max must be an integer >= 4, got {n_max}")
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    n_max = int(n_max)
    hbar, m = constants.hbar, constants.mass
    xs = np.sqrt(hbar / (2 * m * omega0))
    ps = np.sqrt(m * hbar * omega0 / 2)

    if kind == HO1D:
        a = _ladder(n_max + 1)
        q = Operator(xs * (a + a.T), "x", True)
        p = Operator(1j * ps * (a.T - a), "px", True)
        shells = np.arange(n_max + 1)
        energies = hbar * omega0 * (shells + 0.5)
        H0 = Operator(np.diag(energies), "H0", True)
        return Basis(kind, float(omega0), n_max, constants, energies, shells,
                     tuple((int(n),) for n in shells), n_max + 1 - BASIS_BUFFER,
                     (q,), (p,), H0, None)

    if kind != HO2D:
        raise ValueError(f"unknown basis kind {kind!r}")

    # circular quanta: a_plus raises Lz by hbar, a_minus lowers it
    loc = n_max + 1
    a1 = _ladder(loc)
    eye = np.eye(loc)
    a_plus = np.kron(a1, eye)
    a_minus = np.kron(eye, a1)
    a_x = (a_plus + a_minus) / np.sqrt(2)
    a_y = 1j * (a_plus - a_minus) / np.sqrt(2)

    states = []
    for n_p in range(loc):
        for n_m in range(loc - n_p):
            states.append((n_p + n_m, n_p - n_m, n_p * loc + n_m, min(n_p, n_m)))
    states.sort(key=lambda s: (s[0], s[1]))
    idx = np.array([s[2] for s in states])
    shells = np.array([s[0] for s in states])

    def project(mat):
        return mat[np.ix_(idx, idx)]

    x = Operator(project(xs * (a_x + a_x.conj().T)), "x", True)
    y = Operator(project(xs * (a_y + a_y.conj().T)), "y", True)
    px = Operator(project(1j * ps * (a_x.conj().T - a_x)), "px", True)
    py = Operator(project(1j * ps * (a_y.conj().T - a_y)), "py", True)
    energies = hbar * omega0 * (shells + 1.0)
    H0 = Operator(np.diag(energies), "H0", True)
    Lz = sym_product(x, py) - sym_product(y, px)
    Lz = Operator(Lz.matrix, "Lz", True)
    qn = tuple((int(s[3]), int(s[1])) for s in states)
    interior = int(np.sum(shells <= n_max - BASIS_BUFFER))
    return Basis(kind, float(omega0), n_max, constants, energies, shells, qn, interior,
                 (x, y), (px, py), H0, Lz)


@dataclass(frozen=True, eq=False)
class State:
    """Normalized coefficient vector over the basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        norm = np.linalg.norm(c)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} differs from 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @classmethod
    def eigenstate(cls, basis: Basis, index: int) -> "State":
        basis.check_interior(index)
        c = np.zeros(basis.dim, dtype=complex)
        c[index] = 1.0
        return cls(c)

    @classmethod
    def normalized(cls, coeffs) -> "State":
        c = np.asarray(coeffs, dtype=complex)
        return cls(c / np.linalg.norm(c))

    @classmethod
    def coherent(cls, basis: Basis, alpha: complex, axis: int = 0) -> "State":
        """Truncated coherent state of the 1D oscillator (``HO1D`` only)."""
        if basis.kind != HO1D:
            raise ValueError("coherent states are provided for HO1D only")
        n = np.arange(basis.dim)
        logfact = np.cumsum(np.log(np.maximum(n, 1)))
        with np.errstate(divide="ignore"):
            mag = np.exp(n * np.log(abs(alpha)) - 0.5 * logfact) if alpha != 0 else (n == 0) * 1.0
        c = mag * np.exp(1j * n * np.angle(alpha))
        return cls.normalized(c)


def matrix_element(basis: Basis, bra: int, op: Operator, ket: int) -> complex:
    basis.check_interior(bra, ket)
    return complex(op.matrix[bra, ket])


def expectation(state: State, op: Operator) -> complex:
    """``<psi|op|psi>``; hermitian operators give a real value up to rounding."""
    if state.dim != op.dim:
        raise DimensionMismatchError(f"state dim {state.dim} vs operator dim {op.dim}")
    c = state.coeffs
    return complex(np.vdot(c, op.matrix @ c))
