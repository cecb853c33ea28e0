"""Root-finder unit tests."""

import math

import pytest
from hypothesis import given, strategies as st

from henonlab.errors import BracketError, ConvergenceError
from henonlab.rootfind import bisect, central_diff, newton2, newton_safeguarded, second_diff


def test_bisect_sqrt2():
    root = bisect(lambda x: x * x - 2.0, 0.0, 2.0)
    assert abs(root - math.sqrt(2.0)) < 1e-11


def test_bisect_requires_sign_change():
    with pytest.raises(BracketError):
        bisect(lambda x: x * x + 1.0, -1.0, 1.0)


def test_newton_with_derivative():
    root = newton_safeguarded(lambda x: x * x - 2.0, 1.0, df=lambda x: 2.0 * x)
    assert abs(root - math.sqrt(2.0)) < 1e-12


def test_newton_secant_mode():
    root = newton_safeguarded(lambda x: math.cos(x) - x, 0.5)
    assert abs(math.cos(root) - root) < 1e-12


def test_newton_bracket_rescues_bad_seed():
    # Newton from x0=0 on x^2-2 has zero derivative; the bracket saves it.
    root = newton_safeguarded(
        lambda x: x * x - 2.0, 0.0, bracket=(0.0, 2.0), df=lambda x: 2.0 * x
    )
    assert abs(root - math.sqrt(2.0)) < 1e-11


def test_newton_no_bracket_stall_raises():
    with pytest.raises(ConvergenceError):
        newton_safeguarded(lambda x: x * x + 1.0, 0.0, df=lambda x: 2.0 * x)


@given(st.floats(min_value=0.1, max_value=50.0))
def test_newton_square_roots(target):
    root = newton_safeguarded(
        lambda x: x * x - target,
        max(1.0, target),
        bracket=(0.0, max(1.0, target) + 1.0),
        df=lambda x: 2.0 * x,
    )
    assert abs(root - math.sqrt(target)) < 1e-10 * max(1.0, math.sqrt(target))


def test_newton2_linear_system():
    sol = newton2(lambda v: (v[0] + v[1] - 3.0, v[0] - v[1] - 1.0), (0.0, 0.0))
    assert abs(sol[0] - 2.0) < 1e-10
    assert abs(sol[1] - 1.0) < 1e-10


def test_newton2_intersection():
    # circle x^2+y^2=4 with line y=x: root at (sqrt 2, sqrt 2)
    sol = newton2(
        lambda v: (v[0] ** 2 + v[1] ** 2 - 4.0, v[1] - v[0]), (1.0, 1.5)
    )
    assert abs(sol[0] - math.sqrt(2.0)) < 1e-10
    assert abs(sol[1] - math.sqrt(2.0)) < 1e-10


def test_central_and_second_diff():
    assert abs(central_diff(math.sin, 0.3, 1e-5) - math.cos(0.3)) < 1e-9
    assert abs(second_diff(math.sin, 0.3, 1e-4) + math.sin(0.3)) < 1e-6
