import numpy as np
import numpy.testing as npt
import pytest

from dampwave.pressure import FarField, PressureLaw


def test_values_at_unit_volume():
    law = PressureLaw()
    assert law(1.0) == 1.0
    assert law(1.0, 1) == -1.4
    npt.assert_allclose(law(2.0), 2.0 ** -1.4, rtol=0, atol=0)


def test_derivatives_match_finite_differences():
    # each stored order against a central difference of the order below
    law = PressureLaw()
    h = 1e-5
    for v in (0.8, 1.0, 1.3):
        for order in (1, 2, 3):
            fd = (law(v + h, order - 1) - law(v - h, order - 1)) / (2.0 * h)
            npt.assert_allclose(law(v, order), fd, rtol=1e-8)


def test_vectorized_and_scalar():
    law = PressureLaw()
    v = np.array([0.9, 1.0, 1.2])
    out = law(v, 1)
    assert out.shape == v.shape
    assert isinstance(law(1.1), float)


def test_sound_speed():
    law = PressureLaw()
    v = np.array([0.9, 1.05, 1.2])
    npt.assert_allclose(law.sound_speed(v) ** 2, -law(v, 1), rtol=1e-15)


def test_domain_errors():
    law = PressureLaw()
    with pytest.raises(ValueError):
        law(0.0)
    with pytest.raises(ValueError):
        law(np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        law(1.0, order=4)
    with pytest.raises(ValueError):
        PressureLaw(gamma=0.5)


def test_far_field_properties():
    ff = FarField(1.0, 1.1)
    npt.assert_allclose(ff.delta, 0.1)
    npt.assert_allclose(ff.v_mid, 1.05)
    assert ff.bracket() == (1.0, 1.1)
    # reversed jump has the same strength
    assert FarField(1.1, 1.0).delta == ff.delta
    with pytest.raises(ValueError):
        FarField(-1.0, 1.0)
    with pytest.raises(ValueError):
        FarField(1.0, 0.0)
