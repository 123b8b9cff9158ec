"""Sparse multivariate polynomials with exact coefficient arithmetic.

Coefficients are usually floats; they may also be numpy arrays when a
polynomial carries coefficients sampled on a time grid.
"""
from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .errors import DegreeError


def _is_zero(c) -> bool:
    if isinstance(c, np.ndarray):
        return not np.any(c)
    return c == 0


class Poly:
    """Polynomial in ``nvars`` commuting symbols.

    Stored as ``{exponent tuple: coefficient}``; zero coefficients are dropped.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | Iterable = ()):
        self.nvars = int(nvars)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple, object] = {}
        for exps, coef in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} for {self.nvars} variables")
            acc[exps] = acc[exps] + coef if exps in acc else coef
        self._terms = {k: v for k, v in acc.items() if not _is_zero(v)}

    # construction helpers
    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, index, coef=1.0):
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): coef})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def coefficient(self, exps):
        return self._terms.get(tuple(exps), 0.0)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def check_degree(self, cap: int = 2):
        if self.degree > cap:
            raise DegreeError(f"polynomial degree {self.degree} exceeds cap {cap}")
        return self

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Poly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        return Poly(self.nvars, list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.nvars, {k: v * other for k, v in self._terms.items()})
        other = self._coerce(other)
        out = []
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                out.append((tuple(a + b for a, b in zip(ea, eb)), ca * cb))
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def derivative(self, index: int) -> "Poly":
        out = []
        for exps, coef in self._terms.items():
            k = exps[index]
            if k:
                e = list(exps)
                e[index] -= 1
                out.append((tuple(e), coef * k))
        return Poly(self.nvars, out)

    def substitute(self, images: list["Poly"]) -> "Poly":
        """Replace variable ``i`` by ``images[i]`` (all over the same target variables)."""
        if len(images) != self.nvars:
            raise ValueError("need one image per variable")
        target = images[0].nvars
        result = Poly.zero(target)
        for exps, coef in self._terms.items():
            term = Poly.constant(target, coef)
            for i, k in enumerate(exps):
                for _ in range(k):
                    term = term * images[i]
            result = result + term
        return result

    def evaluate(self, point) -> float:
        total = 0.0
        for exps, coef in self._terms.items():
            total = total + coef * np.prod([x**k for x, k in zip(point, exps)])
        return total

    def __eq__(self, other):
        if not isinstance(other, Poly) or other.nvars != self.nvars:
            return NotImplemented
        if self._terms.keys() != other._terms.keys():
            return False
        return all(np.array_equal(self._terms[k], other._terms[k]) for k in self._terms)

    def __hash__(self):
        return hash((self.nvars, tuple(sorted((k, float(v)) for k, v in self._terms.items()))))

    def __repr__(self):
        body = " + ".join(f"{c!r}*{e}" for e, c in self.items()) or "0"
        return f"Poly[{self.nvars}]({body})"
