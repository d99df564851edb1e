import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterdecouple.errors import StepSizeUnderflow
from clusterdecouple.ode import B4, B5, A, C, dopri5


def oscillator(w):
    return lambda t, y: np.array([y[1], -w * w * y[0]])


def test_tableau_consistency():
    # row sums equal the nodes and both weight sets are normalized
    for c, row in zip(C, A):
        assert sum(row) == pytest.approx(c, abs=1e-15)
    assert B5.sum() == pytest.approx(1.0, abs=1e-15)
    assert B4.sum() == pytest.approx(1.0, abs=1e-15)


def test_harmonic_oscillator():
    t = np.linspace(0, 20, 401)
    y, stats = dopri5(oscillator(1.0), (0, 20), [1.0, 0.0], t)
    np.testing.assert_allclose(y[:, 0], np.cos(t), atol=1e-8)
    np.testing.assert_allclose(y[:, 1], -np.sin(t), atol=1e-8)
    assert stats["accepted"] > 0


def test_exponential_decay_endpoint():
    y, _ = dopri5(lambda t, y: -y, (0, 5), [1.0], [0.0, 5.0])
    assert y[0, 0] == 1.0
    assert y[1, 0] == pytest.approx(math.exp(-5), rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.5, 10.0))
def test_oscillator_any_frequency(w, t_end):
    t = np.linspace(0, t_end, 50)
    y, _ = dopri5(oscillator(w), (0, t_end), [0.0, 1.0], t, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(y[:, 0], np.sin(w * t) / w, atol=1e-8)


def test_blow_up_raises():
    with pytest.raises(StepSizeUnderflow):
        dopri5(lambda t, y: y * y, (0, 2), [1.0], [2.0])


def test_bad_span():
    with pytest.raises(ValueError):
        dopri5(lambda t, y: -y, (1, 0), [1.0], [0.5])
    with pytest.raises(ValueError):
        dopri5(lambda t, y: -y, (0, 1), [1.0], [1.5])
