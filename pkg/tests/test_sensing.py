import numpy as np
import pytest

from pneuhaptics.errors import ConfigError, DomainError
from pneuhaptics.sensing import (
    DEFAULT_SIGMA,
    PressureMap,
    export_map,
    sense,
    upsample_bicubic,
)


def test_all_off_is_zero():
    m = sense([0.0, 0.0, 0.0, 0.0], sigma=0.0)
    assert np.all(m.values == 0.0)


def test_block_locality():
    # chamber 1 occupies the top-left 3x3 block only
    m = sense([40e3, 0.0, 0.0, 0.0], sigma=0.0)
    assert np.all(m.values[:3, :3] == 40.0)
    assert np.all(m.values[3:, :] == 0.0)
    assert np.all(m.values[:, 3:] == 0.0)


def test_block_disjointness_all_chambers():
    blocks = {1: (slice(0, 3), slice(0, 3)), 2: (slice(0, 3), slice(3, 6)),
              3: (slice(3, 6), slice(0, 3)), 4: (slice(3, 6), slice(3, 6))}
    for chamber, (rs, cs) in blocks.items():
        p = [0.0] * 4
        p[chamber - 1] = 10e3
        m = sense(p, sigma=0.0)
        inside = m.values[rs, cs]
        outside = m.values.sum() - inside.sum()
        assert np.all(inside == 10.0)
        assert outside == 0.0


def test_linearity_in_pressure():
    rng = np.random.default_rng(3)
    p = rng.uniform(0, 64e3, size=4)
    a = sense(p, sigma=0.0).values
    b = sense(2 * p, sigma=0.0).values
    assert np.allclose(b, 2 * a, rtol=1e-12)


def test_noise_seeded_determinism():
    p = [10e3, 20e3, 30e3, 40e3]
    a = sense(p, sigma=DEFAULT_SIGMA, rng=99).values
    b = sense(p, sigma=DEFAULT_SIGMA, rng=99).values
    c = sense(p, sigma=DEFAULT_SIGMA, rng=100).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(a >= 0.0)


def test_noise_requires_rng():
    with pytest.raises(DomainError):
        sense([0.0] * 4, sigma=1.0)


def test_sense_validation():
    with pytest.raises(DomainError):
        sense([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        sense([-1.0, 0.0, 0.0, 0.0], sigma=0.0)


def test_pressure_map_validation():
    with pytest.raises(ConfigError):
        PressureMap(values=np.zeros((5, 6)))
    with pytest.raises(ConfigError):
        PressureMap(values=np.full((6, 6), -1.0))


def test_upsample_constant():
    m = PressureMap(values=np.full((6, 6), 3.5))
    out = upsample_bicubic(m, 4)
    assert out.shape == (21, 21)
    assert np.allclose(out, 3.5, rtol=1e-12)


def test_upsample_preserves_nodes():
    rng = np.random.default_rng(7)
    grid = rng.random((6, 6))
    out = upsample_bicubic(grid, 5)
    assert out.shape == (26, 26)
    assert np.allclose(out[::5, ::5], grid, rtol=1e-9, atol=1e-12)


def test_upsample_linear_ramp_stays_linear():
    ramp = np.tile(np.arange(6.0), (6, 1))
    out = upsample_bicubic(ramp, 4)
    expect = np.tile(np.linspace(0, 5, 21), (21, 1))
    assert np.allclose(out, expect, atol=1e-9)


def test_upsample_factor_one_is_identity():
    rng = np.random.default_rng(11)
    grid = rng.random((6, 6))
    assert np.allclose(upsample_bicubic(grid, 1), grid, atol=1e-12)


def test_upsample_overshoot_bounded():
    rng = np.random.default_rng(13)
    for _ in range(20):
        grid = rng.random((6, 6))
        out = upsample_bicubic(grid, 6)
        span = grid.max() - grid.min()
        assert out.min() >= grid.min() - 0.25 * span
        assert out.max() <= grid.max() + 0.25 * span


def test_upsample_factor_validation():
    with pytest.raises(DomainError):
        upsample_bicubic(np.zeros((6, 6)), 0)


def test_export_zero_map(tmp_path):
    clamped = export_map(np.zeros((6, 6)), tmp_path / "zero.pgm", scale=64.0)
    assert clamped == 0
    raw = (tmp_path / "zero.pgm").read_bytes()
    header, pix = raw.split(b"255\n", 1)
    assert header == b"P5\n6 6\n"
    assert pix == bytes(36)
    csv_rows = (tmp_path / "zero.csv").read_text().strip().splitlines()
    assert len(csv_rows) == 6
    assert csv_rows[0] == ",".join(["0"] * 6)


def test_export_unified_scale(tmp_path):
    # equal values must map to equal pixels across separate exports
    a = np.full((6, 6), 10.0)
    b = np.full((6, 6), 10.0)
    b[0, 0] = 20.0
    export_map(a, tmp_path / "a", scale=32.0)
    export_map(b, tmp_path / "b", scale=32.0)
    pa = (tmp_path / "a.pgm").read_bytes().split(b"255\n", 1)[1]
    pb = (tmp_path / "b.pgm").read_bytes().split(b"255\n", 1)[1]
    assert pa[1] == pb[1]
    assert pb[0] != pb[1]


def test_export_clamps_above_scale(tmp_path):
    grid = np.full((6, 6), 5.0)
    grid[2, 2] = 100.0
    clamped = export_map(grid, tmp_path / "hot", scale=50.0)
    assert clamped == 1
    pix = (tmp_path / "hot.pgm").read_bytes().split(b"255\n", 1)[1]
    assert pix[2 * 6 + 2] == 255


def test_export_dense_grid(tmp_path):
    grid = upsample_bicubic(np.eye(6) * 12.0, 4)
    export_map(np.maximum(grid, 0.0), tmp_path / "dense.csv", scale=12.0)
    raw = (tmp_path / "dense.pgm").read_bytes()
    assert raw.startswith(b"P5\n21 21\n255\n")
