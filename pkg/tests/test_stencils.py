import numpy as np
import pytest

from vfplab.stencils import centred_matrix
from vfplab.stencils import derivative_matrix
from vfplab.stencils import fornberg_weights


def test_fornberg_central_weights():
    weights = fornberg_weights(0.0, [-1.0, 0.0, 1.0], 2)
    np.testing.assert_allclose(weights[1], [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(weights[2], [1.0, -2.0, 1.0])


@pytest.mark.parametrize("accuracy", [2, 4, 6])
def test_polynomials_are_differentiated_exactly(accuracy):
    x = np.linspace(-1.0, 1.0, 21)
    spacing = x[1] - x[0]
    values = x ** accuracy
    derivative = derivative_matrix(len(x), spacing, 1, accuracy) @ values
    np.testing.assert_allclose(derivative, accuracy * x ** (accuracy - 1), atol=1e-9)


def test_second_derivative_of_sine_converges():
    errors = []
    for n in (40, 80):
        x = np.linspace(0.0, np.pi, n)
        matrix = derivative_matrix(n, x[1] - x[0], 2, 4)
        errors.append(np.max(np.abs(matrix @ np.sin(x) + np.sin(x))))
    assert errors[1] < errors[0] / 10.0


def test_odd_accuracy_is_rejected():
    with pytest.raises(ValueError):
        derivative_matrix(20, 0.1, 1, 3)


@pytest.mark.parametrize("accuracy", [2, 4, 6])
def test_centred_matrix_is_skew_symmetric(accuracy):
    matrix = centred_matrix(30, 0.1, accuracy).toarray()
    np.testing.assert_array_equal(matrix, -matrix.T)


def test_centred_matrix_differentiates_interior_polynomials():
    x = np.linspace(-1.0, 1.0, 41)
    derivative = centred_matrix(len(x), x[1] - x[0], 6) @ x ** 5
    np.testing.assert_allclose(derivative[3:-3], 5.0 * x[3:-3] ** 4, atol=1e-9)
