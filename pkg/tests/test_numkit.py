import numpy as np
import pytest

from citecast.numkit import (
    Rng,
    concat,
    hadamard,
    init_uniform,
    matrix,
    matvec,
    sigmoid,
    softmax,
    softplus,
    tanh_act,
    vec,
)


def test_vec_and_matrix_constructors():
    v = vec([1.0, 2.0])
    assert v.dtype == np.float64 and v.shape == (2,)
    m = matrix([[1.0, 2.0], [3.0, 4.0]])
    assert m.dtype == np.float64 and m.shape == (2, 2)
    with pytest.raises(ValueError):
        matrix([1.0, 2.0])


def test_matvec_and_shape_error():
    m = matrix([[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_array_equal(matvec(m, vec([3.0, 4.0])), [3.0, 8.0])
    with pytest.raises(ValueError, match="matvec shape mismatch"):
        matvec(m, vec([1.0, 2.0, 3.0]))


def test_concat():
    np.testing.assert_array_equal(concat(vec([1.0, 2.0]), vec([3.0])), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(concat(vec([]), vec([5.0])), [5.0])


def test_sigmoid_midpoint_exact():
    assert sigmoid(vec([0.0]))[0] == 0.5


def test_sigmoid_extremes_finite():
    out = sigmoid(vec([-1000.0, -50.0, 50.0, 1000.0]))
    assert np.all(np.isfinite(out))
    assert out[0] == 0.0 and out[3] == 1.0
    assert 0.0 < out[1] < 1e-20 and 1.0 - out[2] < 1e-20


def test_sigmoid_symmetry():
    x = vec([-3.0, -0.5, 0.7, 4.0])
    np.testing.assert_allclose(sigmoid(x) + sigmoid(-x), 1.0, rtol=1e-15)


def test_tanh_act_matches_numpy():
    x = vec([-2.0, 0.0, 1.5])
    np.testing.assert_array_equal(tanh_act(x), np.tanh(x))


def test_softplus_values_and_overflow():
    np.testing.assert_allclose(softplus(vec([0.0]))[0], np.log(2.0), rtol=1e-15)
    out = softplus(vec([-1000.0, 1000.0]))
    assert out[0] == 0.0
    assert out[1] == 1000.0
    assert np.all(np.isfinite(softplus(vec([-745.0, 745.0]))))


def test_softplus_positive():
    x = vec([-30.0, -1.0, 0.0, 1.0, 30.0])
    assert np.all(softplus(x) >= 0.0)


def test_softmax_sums_to_one_for_large_inputs():
    rng = Rng(3)
    for scale in (1.0, 1e3, 1e6):
        x = vec(rng.uniform(-scale, scale, 7))
        out = softmax(x)
        assert abs(out.sum() - 1.0) <= 1e-9
        assert np.all(out >= 0.0)
    assert np.all(softmax(vec([0.3, -1.2, 2.0])) > 0.0)


def test_softmax_shift_invariance():
    x = vec([0.1, -2.0, 3.0])
    np.testing.assert_allclose(softmax(x), softmax(x + 1234.5), rtol=1e-12)


def test_softmax_empty_rejected():
    with pytest.raises(ValueError):
        softmax(vec([]))


def test_hadamard():
    np.testing.assert_array_equal(
        hadamard(vec([1.0, 2.0]), vec([3.0, 4.0])), [3.0, 8.0]
    )
    with pytest.raises(ValueError):
        hadamard(vec([1.0]), vec([1.0, 2.0]))


def test_rng_deterministic_across_instances():
    a, b = Rng(99), Rng(99)
    np.testing.assert_array_equal(a.uniform(-1, 1, 10), b.uniform(-1, 1, 10))
    np.testing.assert_array_equal(a.integers(0, 100, 5), b.integers(0, 100, 5))
    np.testing.assert_array_equal(a.permutation(8), b.permutation(8))


def test_rng_seeds_differ():
    assert not np.array_equal(Rng(1).uniform(0, 1, 8), Rng(2).uniform(0, 1, 8))


def test_init_uniform_bounds_and_shape():
    m = init_uniform(Rng(5), 20, 30, 0.08)
    assert m.shape == (20, 30)
    assert np.all(np.abs(m) <= 0.08)
    assert m.std() > 0.0


def test_init_uniform_rejects_bad_scale():
    with pytest.raises(ValueError):
        init_uniform(Rng(5), 2, 2, 0.0)
