import numpy as np
import pytest
from hypothesis import given, strategies as st

from intbounds.data import (BoundCurve, DataError, EstimatorKind, EvaluationGrid, Sample, Side,
                            Target, TransformSpec, build_grid, lattice_grid, transform_outcome)
from intbounds.montecarlo import DgpSpec, Y0, dgp_sample


def one(y, z, t=1.0, **kw):
    s = Sample(y=[y], z=[z], v=[0.0])
    return transform_outcome(s, TransformSpec(t=t, y0=-1.96, y1=1.96, **kw)).y[0]


def test_miv_lower_keeps_treated_outcome():
    assert one(2.0, 1.0) == 2.0


def test_miv_lower_replaces_untreated_with_floor():
    assert one(2.0, 0.0) == -1.96


def test_miv_upper_uses_ceiling():
    assert one(0.5, 0.0, target=Target.UPPER_BOUND) == 1.96


@pytest.mark.parametrize("z,expected", [(0.0, 2.0), (1.0, 2.0), (2.0, -1.96)])
def test_mtr_lower_form(z, expected):
    assert one(2.0, z, mtr=True) == expected


@pytest.mark.parametrize("z,expected", [(0.0, 1.96), (1.0, 2.0), (2.0, 2.0)])
def test_mtr_upper_form(z, expected):
    assert one(2.0, z, mtr=True, target=Target.UPPER_BOUND) == expected


def test_dgp1_transformed_mean():
    raw = dgp_sample(DgpSpec(1, 200_000), 5)
    y = transform_outcome(raw, TransformSpec(1.0, Y0, -Y0)).y
    se = y.std() / np.sqrt(y.size)
    assert abs(y.mean() - (-0.98)) < 4 * se


def test_double_transform_detectably_differs():
    # a second pass with a different floor changes untreated rows
    raw = dgp_sample(DgpSpec(1, 1000), 1)
    once = transform_outcome(raw, TransformSpec(1.0, Y0, -Y0))
    again = transform_outcome(once, TransformSpec(1.0, -5.0, 5.0))
    assert not np.array_equal(once.y, again.y)
    same = transform_outcome(once, TransformSpec(1.0, Y0, -Y0))
    np.testing.assert_array_equal(once.y, same.y)


def test_sample_rejects_empty_and_nonfinite():
    with pytest.raises(DataError):
        Sample(y=[], z=[], v=[])
    with pytest.raises(DataError):
        Sample(y=[1.0, np.nan], z=[0, 1], v=[0, 1])
    with pytest.raises(DataError):
        TransformSpec(1.0, 2.0, 1.0)


def test_build_grid_known_points():
    s = Sample(y=np.zeros(5), z=np.zeros(5), v=[0, 1, 2, 3, 4])
    g = build_grid(s, G=5, trim_lo=0, hi=4)
    np.testing.assert_allclose(g.points, [0, 1, 2, 3, 4])
    assert g.measure == 4


def test_build_grid_two_points():
    s = Sample(y=np.zeros(3), z=np.zeros(3), v=[0, 0.5, 1])
    g = build_grid(s, G=2, trim_lo=0, hi=1)
    np.testing.assert_allclose(g.points, [0, 1])
    assert g.measure == 1


def test_build_grid_starts_at_trim_percentile():
    rng = np.random.default_rng(0)
    v = rng.uniform(-2, 2, 1000)
    s = Sample(y=np.zeros_like(v), z=np.zeros_like(v), v=v)
    g = build_grid(s, G=50, trim_lo=5, hi=1.5)
    assert g.points[0] == pytest.approx(np.percentile(v, 5))
    assert g.points[-1] == 1.5


def test_build_grid_degenerate():
    s = Sample(y=np.zeros(4), z=np.zeros(4), v=np.ones(4))
    with pytest.raises(DataError):
        build_grid(s, 10)
    with pytest.raises(DataError):
        build_grid(Sample(y=[0, 1], z=[0, 0], v=[0, 1]), 1)


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=50, unique=True),
       st.integers(2, 300))
def test_grid_sorted_unique(vals, G):
    s = Sample(y=np.zeros(len(vals)), z=np.zeros(len(vals)), v=vals)
    g = build_grid(s, G, trim_lo=0)
    assert np.all(np.diff(g.points) > 0)
    assert len(g) == G


def test_lattice_grid_for_two_covariates():
    rng = np.random.default_rng(1)
    v = rng.uniform(0, 1, (300, 2))
    s = Sample(y=np.zeros(300), z=np.zeros(300), v=v)
    g = lattice_grid(s, per_axis=5)
    assert g.points.shape == (25, 2) and g.d == 2 and g.measure > 0


def test_curve_invariants_checked():
    g = EvaluationGrid.linspace(0, 1, 3)
    with pytest.raises(DataError):
        BoundCurve(g, [0, 0, 0], [0.1, -0.1, 0.1], Side.UPPER, 10, EstimatorKind.SERIES)
    with pytest.raises(DataError):
        BoundCurve(g, [0, 0], [0.1, 0.1], Side.UPPER, 10, EstimatorKind.SERIES)
