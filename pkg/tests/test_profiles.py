import math

import numpy as np
import pytest
from scipy import integrate

from quasipert.profiles import (Const, Integral, Linear, Product, Rect, Sinusoid, from_dict,
                                min_pulse_length, to_dict)


def test_rect_sides():
    r = Rect(2.0)
    assert r.value(0.0, +1) == 1.0 and r.value(0.0, -1) == 0.0
    assert r.value(2.0, -1) == 1.0 and r.value(2.0, +1) == 0.0
    assert r.jumps() == ((0.0, 1.0), (2.0, -1.0))
    assert r.derivative() == (0.0, None)
    np.testing.assert_array_equal(r.value(np.array([-1, 1, 3.0])), [0, 1, 0])


def test_sinusoid_derivative_and_jumps():
    s = Sinusoid(2.0, math.pi)
    assert s.jumps() == ()
    scale, d = s.derivative()
    t = 0.37
    assert scale * d.value(t) == pytest.approx(2 * math.cos(2 * t))
    assert Sinusoid(1.0, 1.0).jumps()[0][0] == 1.0


@pytest.mark.parametrize("base", [Const(), Rect(1.5), Sinusoid(1.3, 2.0, 0.4)])
def test_integral_closed_form_matches_quadrature(base):
    I = Integral(base)
    for t in (0.3, 1.2, 2.7):
        ref = integrate.quad(lambda s: base.value(s), 0, t, points=base.breakpoints() or None)[0]
        assert I.value(t) == pytest.approx(ref, abs=1e-12)
    assert I.derivative() == (1.0, base)
    assert I.jumps() == ()


def test_product_canonical():
    assert Product.of(Rect(1.0), Const()) == Product.of(Const(), Rect(1.0))
    assert Product.of(Rect(1.0), Rect(1.0)).value(0.5) == 1.0


def test_roundtrip_and_pulse_length():
    for p in (Const(), Linear(), Rect(2.0), Sinusoid(1.0, 3.0, 0.2), Integral(Rect(2.0))):
        assert from_dict(to_dict(p)) == p
    assert min_pulse_length([Rect(2.0), Sinusoid(1.0, 0.5)]) == 0.5
    assert min_pulse_length([Const()]) is None
    with pytest.raises(ValueError):
        from_dict({"kind": "gauss"})
