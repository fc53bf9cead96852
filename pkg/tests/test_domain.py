import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from facade2d.domain import (
    Edge,
    MaterialLayer,
    ReferenceScales,
    WallAssembly,
    biot_number,
    build_grid,
    dimensionalize,
    nondimensionalize,
)


def scales_for(wall, **kw):
    return ReferenceScales.for_wall(wall, **kw)


def test_layer_validation():
    with pytest.raises(ValueError):
        MaterialLayer("bad", -0.1, 1.0, 1.0e6)
    with pytest.raises(ValueError):
        MaterialLayer("bad", 0.1, 0.0, 1.0e6)
    with pytest.raises(ValueError):
        MaterialLayer("bad", 0.1, 1.0, -1.0)


def test_wall_contiguity_rejected():
    layers = (
        MaterialLayer("a", 0.2, 1.4, 2.0e6),
        MaterialLayer("b", 0.14, 0.05, 0.85e6),
        MaterialLayer("c", 0.02, 0.25, 0.85e6),
    )
    with pytest.raises(ValueError, match="length"):
        WallAssembly(layers=layers, height=3.0, length=0.37)


def test_single_layer_identity_scaling():
    wall = WallAssembly((MaterialLayer("only", 0.5, 1.4, 2.0e6),), height=1.0, length=0.5)
    scales = scales_for(wall)
    grid = build_grid(wall, 11, 11, scales)
    assert grid.dx == pytest.approx(0.1, abs=0)
    assert grid.dy == pytest.approx(0.1, abs=0)
    assert np.all(grid.kstar == 1.0)
    assert np.all(grid.cstar == 1.0)


def test_table2_distortion_coefficients(table2_wall):
    scales = scales_for(table2_wall)
    assert scales.conductivity == 1.4
    assert scales.capacity == 2.0e6
    grid = build_grid(table2_wall, 149, 11, scales)
    x_m = grid.x * table2_wall.length
    concrete = x_m < 0.2 - 1e-12
    wood = (x_m > 0.2 + 1e-12) & (x_m < 0.35 - 1e-12)
    gypsum = x_m > 0.35 + 1e-12
    assert np.allclose(grid.kstar[concrete], 1.0)
    assert np.allclose(grid.kstar[wood], 0.05 / 1.4)
    assert np.allclose(grid.kstar[gypsum], 0.25 / 1.4)
    assert grid.kstar[wood][0] == pytest.approx(0.035714285714285712, rel=1e-12)
    assert grid.kstar[gypsum][0] == pytest.approx(0.17857142857142858, rel=1e-12)


def test_interface_node_takes_plus_x_side(table2_wall):
    scales = scales_for(table2_wall)
    grid = build_grid(table2_wall, 149, 11, scales)
    # dx = 2.5 mm puts nodes 80 and 140 exactly on the interfaces
    assert grid.x[80] * table2_wall.length == pytest.approx(0.2, rel=1e-12)
    assert grid.layer_index[80] == 1
    assert grid.layer_index[140] == 2


def test_grid_rejects_small_counts(table2_wall):
    scales = scales_for(table2_wall)
    with pytest.raises(ValueError):
        build_grid(table2_wall, 2, 11, scales)
    with pytest.raises(ValueError):
        build_grid(table2_wall, 11, 1, scales)


def test_node_assignment_recovers_layer_widths(table2_wall):
    scales = scales_for(table2_wall)
    grid = build_grid(table2_wall, 97, 11, scales)
    cell = grid.dx * table2_wall.length
    for k, layer in enumerate(table2_wall.layers):
        width = np.count_nonzero(grid.layer_index == k) * cell
        assert abs(width - layer.thickness) <= cell + 1e-12


def test_nondimensionalize_reference_points(table2_wall):
    scales = scales_for(table2_wall)
    assert nondimensionalize(scales.temperature, scales) == 0.0
    assert nondimensionalize(scales.temperature + scales.temperature_span, scales) == 1.0
    s = scales_for(table2_wall, temperature=283.15, temperature_span=20.0)
    assert nondimensionalize(293.15, s) == pytest.approx(0.5, rel=1e-14)


def test_scales_reject_zero_span(table2_wall):
    with pytest.raises(ValueError):
        scales_for(table2_wall, temperature_span=0.0)


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(
        np.float64, hnp.array_shapes(max_dims=2, max_side=6),
        elements=st.floats(min_value=-1e5, max_value=1e5, allow_nan=False),
    )
)
def test_round_trip_property(field):
    scales = ReferenceScales(length_x=0.37, length_y=3.0, conductivity=1.4,
                             capacity=2.0e6, temperature=293.15,
                             temperature_span=20.0)
    back = dimensionalize(nondimensionalize(field, scales), scales)
    assert np.allclose(back, field, rtol=1e-12, atol=1e-9)


def test_fourier_ratio_matches_aspect(table2_wall):
    scales = scales_for(table2_wall)
    ratio = scales.fourier_x / scales.fourier_y
    assert ratio == pytest.approx((table2_wall.height / table2_wall.length) ** 2,
                                  rel=1e-14)


def test_biot_numbers(table2_wall):
    scales = scales_for(table2_wall)
    assert biot_number(0.0, scales, Edge.LEFT) == 0.0
    h_unit = scales.conductivity / scales.length_x
    assert biot_number(h_unit, scales, Edge.LEFT) == pytest.approx(1.0, rel=1e-14)
    assert biot_number(10.0, scales, Edge.LEFT) == pytest.approx(
        2.642857142857143, rel=1e-12
    )
    # horizontal edges scale with the facade height
    assert biot_number(10.0, scales, Edge.TOP) == pytest.approx(
        10.0 * 3.0 / 1.4, rel=1e-12
    )
    with pytest.raises(ValueError):
        biot_number(-1.0, scales, Edge.LEFT)
