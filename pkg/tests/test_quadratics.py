import numpy as np
import pytest

from persagg.quadratics import BlockSet, ConvexQuadratic, quad1


def test_value_matches_direct_evaluation():
    f = ConvexQuadratic(2, np.array([1.0, 0.5]), np.array([-1.0, 2.0]), 3.0)
    x = np.array([2.0, -1.0])
    assert f.value(x) == pytest.approx(4.0 + 0.5 - 2.0 - 2.0 + 3.0)


def test_negative_curvature_rejected():
    with pytest.raises(ValueError):
        ConvexQuadratic(1, np.array([-0.1]), np.array([0.0]))


def test_box_min_interior_vertex():
    # f(x) = x^2 - 2x has its vertex at x = 1, inside [0, 3]
    f = quad1(1.0, -2.0)
    assert f.box_min([0.0], [3.0]) == pytest.approx(-1.0)


def test_box_min_clipped_vertex():
    # g(x) = 2x^2 + 5x, vertex at -5/4 outside [-1, 1], so min at x = -1
    g = quad1(2.0, 5.0)
    assert g.box_min([-1.0], [1.0]) == pytest.approx(-3.0)
    assert g.box_max([-1.0], [1.0]) == pytest.approx(7.0)


def test_box_extrema_against_grid():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = float(rng.uniform(0.0, 3.0)) if rng.random() < 0.8 else 0.0
        b = float(rng.uniform(-4.0, 4.0))
        lo = float(rng.uniform(-3.0, 1.0))
        hi = lo + float(rng.uniform(0.1, 4.0))
        f = quad1(a, b)
        xs = np.linspace(lo, hi, 10001)
        vals = a * xs**2 + b * xs
        assert f.box_min([lo], [hi]) == pytest.approx(vals.min(), abs=1e-6)
        assert f.box_max([lo], [hi]) == pytest.approx(vals.max(), abs=1e-6)


def test_is_linear_flag():
    assert quad1(0.0, 3.0).is_linear
    assert not quad1(0.5, 3.0).is_linear


def test_blockset_contains_and_center():
    rows = ((quad1(1.0, 0.0), 1.0),)
    bs = BlockSet(1, rows, np.array([-1.0]), np.array([1.0]))
    assert bs.contains(np.array([0.5]))
    assert not bs.contains(np.array([1.5]))
    assert bs.center() == pytest.approx([0.0])


def test_zero_singleton():
    z = BlockSet.zero(3)
    assert z.is_zero_singleton
    assert z.contains(np.zeros(3))
    rows = ((quad1(1.0, 0.0), 1.0),)
    assert not BlockSet(1, rows, np.array([-1.0]), np.array([1.0])).is_zero_singleton
