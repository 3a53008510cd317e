import numpy as np
import pytest
from hypothesis import given, strategies as st

from dfrc_outage.array import (
    AngleGrid,
    ArrayConfig,
    BeampatternSpec,
    beampattern,
    find_peaks_deg,
    ideal_beampattern,
    steering_matrix,
    steering_vector,
)


def test_half_wavelength_default():
    cfg = ArrayConfig(8)
    assert cfg.spacing == pytest.approx(cfg.wavelength / 2)
    c2 = ArrayConfig.from_carrier(8, 5e9)
    assert c2.spacing == pytest.approx(c2.wavelength / 2)


@pytest.mark.parametrize("bad", [dict(num_antennas=0), dict(num_antennas=3, wavelength=-1.0),
                                 dict(num_antennas=3, spacing=0.0)])
def test_array_validation(bad):
    with pytest.raises(ValueError):
        ArrayConfig(**bad)


@given(theta=st.floats(-np.pi / 2, np.pi / 2), n=st.integers(1, 16))
def test_steering_unit_modulus(theta, n):
    a = steering_vector(ArrayConfig(n), theta)
    assert a.shape == (n,)
    assert np.allclose(np.abs(a), 1.0)
    assert a[0] == 1


def test_steering_broadside_and_endfire():
    cfg = ArrayConfig(4)
    assert np.allclose(steering_vector(cfg, 0.0), 1)
    # half-wavelength spacing at 90 degrees alternates sign
    assert np.allclose(steering_vector(cfg, np.pi / 2), [1, -1, 1, -1])


def test_steering_rejects_out_of_range():
    with pytest.raises(ValueError):
        steering_vector(ArrayConfig(4), 2.0)


def test_steering_matrix_shape():
    A = steering_matrix(ArrayConfig(5), np.linspace(-1, 1, 7))
    assert A.shape == (7, 5)


def test_grid_validation():
    with pytest.raises(ValueError):
        AngleGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        AngleGrid(np.array([0.1, 0.0]))
    with pytest.raises(ValueError):
        AngleGrid(np.array([0.0, 2.0]))
    g = AngleGrid.uniform(181)
    assert len(g) == 181 and np.allclose(g.degrees[[0, 90, 180]], [-90, 0, 90])


def test_rectangular_plateaus():
    g = AngleGrid.uniform(181)
    spec = BeampatternSpec.rectangular(np.radians([-30, 0, 30]), np.radians(5), g)
    assert spec.num_dois == 3
    # 11 one-degree points per plateau
    assert spec.desired.sum() == 33
    assert ideal_beampattern(np.radians([0]), 0.0, g).sum() == 1


def test_spec_validation():
    g = AngleGrid.uniform(11)
    with pytest.raises(ValueError):
        BeampatternSpec(g, np.ones(5), np.array([0.0]))
    with pytest.raises(ValueError):
        BeampatternSpec(g, -np.ones(11), np.array([0.0]))


def test_beampattern_identity_is_flat():
    g = AngleGrid.uniform(31)
    assert np.allclose(beampattern(np.eye(6), g), 6.0)


def test_beampattern_steered_peak():
    cfg, g = ArrayConfig(10), AngleGrid.uniform(181)
    a = steering_vector(cfg, np.radians(20))
    p = beampattern(np.outer(a, a.conj()), g, cfg)
    assert g.degrees[np.argmax(p)] == pytest.approx(20)
    assert p.max() == pytest.approx(100)
    assert np.allclose(find_peaks_deg(p, g, 1), [20])


def test_beampattern_size_mismatch():
    with pytest.raises(ValueError):
        beampattern(np.eye(3), AngleGrid.uniform(5), ArrayConfig(4))
