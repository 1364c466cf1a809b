import numpy as np
import pytest

from src.trajectory.synth import (SYNTH_KINDS, parse_synth_spec, resample_constant_speed,
                                  synth_trajectory)


def test_circle():
    stream = synth_trajectory("circle", {"radius": 0.1, "duration": 2.0})
    assert len(stream) == 200
    assert stream.rate == pytest.approx(100.0)
    np.testing.assert_allclose(np.linalg.norm(stream.positions[:, 1:], axis=1), 0.1, atol=1e-12)
    np.testing.assert_allclose(stream.positions[:, 0], 0.0)
    np.testing.assert_allclose(stream.positions[0], [0.0, 0.1, 0.0], atol=1e-12)


def test_sample_rate_defaults_to_stream_rate(restore_config):
    restore_config.set("simulation", "stream_rate", 200.0)
    stream = synth_trajectory("hold", {"duration": 0.5})
    assert stream.rate == pytest.approx(200.0)
    assert len(stream) == 100
    assert synth_trajectory("hold", {"duration": 0.5, "rate": 50.0}).rate == pytest.approx(50.0)


def test_figure_eight_crosses_axis_at_extremes():
    stream = synth_trajectory("figure8", {"A": 0.1, "B": 0.05, "duration": 4.0})
    y, z = stream.positions[:, 1], stream.positions[:, 2]
    assert np.max(y) == pytest.approx(0.1, abs=1e-9)
    assert np.min(y) == pytest.approx(-0.1, abs=1e-3)
    np.testing.assert_allclose(z[np.argmax(y)], 0.0, atol=1e-9)
    assert np.max(np.abs(z)) <= 0.05 + 1e-12


def test_script_is_seeded():
    first = synth_trajectory("script", {"seed": 3})
    second = synth_trajectory("script", {"seed": 3})
    other = synth_trajectory("script", {"seed": 4})
    np.testing.assert_array_equal(first.positions, second.positions)
    assert not np.array_equal(first.positions, other.positions)
    assert first.duration == pytest.approx(6.0, abs=0.02)


@pytest.mark.parametrize("letter", ["B", "F", "H"])
def test_letters_have_constant_speed(letter):
    stream = synth_trajectory("letter", {"letter": letter, "height": 0.1, "speed": 0.05})
    steps = np.linalg.norm(np.diff(stream.positions, axis=0), axis=1)
    assert np.median(steps) == pytest.approx(0.05 / 100.0, rel=1e-6)
    assert np.max(steps) <= 0.05 / 100.0 + 1e-12
    extent = stream.positions.max(axis=0) - stream.positions.min(axis=0)
    assert extent[2] == pytest.approx(0.1, abs=1e-3)
    assert extent[0] == 0.0


def test_unknown_letter():
    with pytest.raises(ValueError):
        synth_trajectory("letter", {"letter": "Q"})


def test_hold():
    stream = synth_trajectory("hold", {"duration": 1.0, "point": [0.0, 0.1, 0.2]})
    assert np.all(stream.speeds == 0.0)
    np.testing.assert_allclose(stream.positions, np.tile([0.0, 0.1, 0.2], (len(stream), 1)))


def test_resample_constant_speed():
    path = np.array([[0.0, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.1, 0.1]])
    points = resample_constant_speed(path, speed=0.1, rate=100.0)
    np.testing.assert_allclose(points[0], path[0])
    np.testing.assert_allclose(points[-1], path[-1])
    assert len(points) in (201, 202)


def test_parse_spec():
    stream = parse_synth_spec("synth:circle,radius=0.05,duration=1")
    assert len(stream) == 100
    np.testing.assert_allclose(np.linalg.norm(stream.positions[:, 1:], axis=1), 0.05, atol=1e-12)
    assert len(parse_synth_spec("synth:script,seed=2")) > 0
    with pytest.raises(ValueError):
        parse_synth_spec("synth:")
    with pytest.raises(ValueError):
        parse_synth_spec("synth:circle,radius")


def test_unknown_kind():
    assert "circle" in SYNTH_KINDS
    with pytest.raises(ValueError):
        synth_trajectory("spiral")
