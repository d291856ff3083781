import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickebell.confusion import ConfusionMode, ConfusionModel
from dickebell.simcore import ShapeError

flip = st.floats(0.0, 0.45)


def test_identity_and_symmetric():
    assert ConfusionModel.identity(3).is_identity()
    m = ConfusionModel.symmetric(1, 0.02)
    np.testing.assert_allclose(m.apply(np.array([1.0, 0.0])), [0.98, 0.02])


def test_invalid_models_rejected():
    with pytest.raises(ValueError):
        ConfusionModel(ConfusionMode.PER_QUBIT, 1, per_qubit=np.array([[[0.9, 0.1], [0.2, 0.9]]]))
    with pytest.raises(ShapeError):
        ConfusionModel(ConfusionMode.PER_QUBIT, 2, per_qubit=np.eye(2)[None])
    with pytest.raises(ValueError):
        ConfusionModel(ConfusionMode.FULL, 1, full=np.array([[1.1, 0], [-0.1, 1]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.lists(flip, min_size=8, max_size=8), st.integers(0, 2 ** 31))
def test_apply_conserves_probability(n, flips, seed):
    m = ConfusionModel.from_flips(n, flips[:n], flips[4:4 + n])
    p = np.random.default_rng(seed).dirichlet(np.ones(2 ** n))
    out = m.apply(p)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(out >= 0)
    np.testing.assert_allclose(out, m.matrix() @ p, atol=1e-14)


def test_kron_order_qubit_zero_leftmost():
    m = ConfusionModel.from_flips(2, [0.1, 0.0], [0.0, 0.0])
    out = m.apply(np.array([1.0, 0, 0, 0]))
    assert out[2] == pytest.approx(0.1)  # '10': qubit 0 flipped


@pytest.mark.parametrize("mode", list(ConfusionMode))
def test_text_round_trip(mode, rng):
    base = ConfusionModel.from_flips(2, rng.uniform(0, 0.1, 2), rng.uniform(0, 0.1, 2))
    m = base if mode is ConfusionMode.PER_QUBIT else ConfusionModel(mode, 2, full=base.matrix())
    again = ConfusionModel.from_text(m.to_text())
    assert again.mode is mode
    np.testing.assert_array_equal(again.matrix(), m.matrix())


def test_text_missing_header():
    with pytest.raises(ValueError, match="qubits"):
        ConfusionModel.from_text("mode PER_QUBIT\n")
