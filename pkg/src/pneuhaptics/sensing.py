"""Virtual 6x6 tactile sensor between the actuator and its constraint.

Each chamber sits over one 3x3 block of the array (2x2 chambers tile the
6x6 grid) and contributes gain * pressure_kPa to every element of its block.
Output is dimensionless, like the raw counts of the physical array. Gaussian
noise is seeded and clamped at zero so maps stay non-negative.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .statics import DEFAULT_LAYOUT

GRID = 6
BLOCK = 3
GAIN_PER_KPA = 1.0
FULL_SCALE_KPA = 64.0
DEFAULT_SIGMA = 0.02 * GAIN_PER_KPA * FULL_SCALE_KPA  # 2% of full scale


@dataclass(frozen=True)
class PressureMap:
    """One sampled sensor frame (6x6 dimensionless values)."""

    values: np.ndarray
    timestamp: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (GRID, GRID):
            raise ConfigError(f"pressure map must be {GRID}x{GRID}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ConfigError("pressure map values must be finite and non-negative")
        object.__setattr__(self, "values", v)


def sense(chamber_pressures, gain: float = GAIN_PER_KPA, sigma: float = DEFAULT_SIGMA,
          rng=None, layout: dict = None, timestamp: float = 0.0) -> PressureMap:
    """Render four chamber pressures (Pa) into a noisy 6x6 sensor frame.

    `rng` is a numpy Generator or an integer seed; omit it only for sigma=0.
    """
    p = np.asarray(chamber_pressures, dtype=float)
    if p.shape != (4,):
        raise DomainError("expected 4 chamber pressures")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("chamber pressures must be finite and non-negative")
    if sigma < 0:
        raise DomainError("noise sigma must be non-negative")
    layout = layout if layout is not None else DEFAULT_LAYOUT
    grid = np.zeros((GRID, GRID))
    for chamber, (row, col) in layout.items():
        block = grid[BLOCK * row:BLOCK * (row + 1), BLOCK * col:BLOCK * (col + 1)]
        block += gain * p[chamber - 1] / 1000.0
    if sigma > 0:
        if rng is None:
            raise DomainError("noisy sensing requires an rng or seed")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        grid = grid + rng.normal(0.0, sigma, size=grid.shape)
        grid = np.maximum(grid, 0.0)
    return PressureMap(values=grid, timestamp=timestamp, noise_sigma=sigma)


def _catmull_rom_weights(n: int, factor: int) -> np.ndarray:
    """Row-interpolation matrix W so that fine = W @ coarse along one axis.

    Standard cubic-convolution (Catmull-Rom) segments with ghost nodes
    linearly extrapolated past each edge, which keeps constants and ramps
    exact all the way to the boundary.
    """
    m = (n - 1) * factor + 1
    w = np.zeros((m, n))
    for k in range(m):
        i, frac = divmod(k, factor)
        t = frac / factor
        if frac == 0:
            w[k, i] = 1.0  # output lattice hits the node exactly
            continue
        c_m1 = 0.5 * (-t + 2 * t**2 - t**3)
        c_0 = 0.5 * (2 - 5 * t**2 + 3 * t**3)
        c_p1 = 0.5 * (t + 4 * t**2 - 3 * t**3)
        c_p2 = 0.5 * (-t**2 + t**3)
        for offset, coeff in ((-1, c_m1), (0, c_0), (1, c_p1), (2, c_p2)):
            j = i + offset
            if j < 0:
                w[k, 0] += 2 * coeff  # ghost v[-1] = 2*v[0] - v[1]
                w[k, 1] -= coeff
            elif j > n - 1:
                w[k, n - 1] += 2 * coeff
                w[k, n - 2] -= coeff
            else:
                w[k, j] += coeff
    return w


def upsample_bicubic(pressure_map, factor: int) -> np.ndarray:
    """Interpolating bicubic upsample to a ((6-1)*factor + 1)-per-side grid.

    Original nodes land exactly on the output lattice and keep their values;
    separable Catmull-Rom segments bound overshoot far tighter than a global
    spline would.
    """
    if not float(factor).is_integer() or factor < 1:
        raise DomainError("factor must be an integer >= 1")
    factor = int(factor)
    values = pressure_map.values if isinstance(pressure_map, PressureMap) else np.asarray(pressure_map, float)
    if values.ndim != 2 or min(values.shape) < 4:
        raise DomainError("need a 2-D grid with at least 4 nodes per side")
    w_rows = _catmull_rom_weights(values.shape[0], factor)
    w_cols = _catmull_rom_weights(values.shape[1], factor)
    return w_rows @ values @ w_cols.T


def export_map(values, path, scale: float) -> int:
    """Write a grid as CSV plus an 8-bit PGM under a shared intensity scale.

    `path` may end in .csv or .pgm; both files are written with that stem.
    Returns the number of pixels clamped at the scale maximum.
    """
    if scale <= 0:
        raise DomainError("scale max must be positive")
    v = pressure_values(values)
    stem, ext = os.path.splitext(os.fspath(path))
    if ext not in ("", ".csv", ".pgm"):
        stem = os.fspath(path)
    csv_path = stem + ".csv"
    pgm_path = stem + ".pgm"
    with open(csv_path, "w") as fh:
        for row in v:
            fh.write(",".join(f"{x:.9g}" for x in row) + "\n")
    clamped = int(np.count_nonzero(v > scale))
    pixels = np.clip(v / scale, 0.0, 1.0)
    pixels = np.round(pixels * 255).astype(np.uint8)
    h, w = pixels.shape
    with open(pgm_path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    return clamped


def pressure_values(values) -> np.ndarray:
    """Accept a PressureMap or bare array and return the float grid."""
    v = values.values if isinstance(values, PressureMap) else np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise DomainError("expected a 2-D grid")
    return v


def block_means(values, layout: dict = None) -> np.ndarray:
    """Mean of each chamber's 3x3 block, indexed by chamber (shape 4)."""
    v = pressure_values(values)
    if v.shape != (GRID, GRID):
        raise DomainError(f"expected a {GRID}x{GRID} grid")
    layout = layout if layout is not None else DEFAULT_LAYOUT
    out = np.zeros(4)
    for chamber, (row, col) in layout.items():
        block = v[BLOCK * row:BLOCK * (row + 1), BLOCK * col:BLOCK * (col + 1)]
        out[chamber - 1] = block.mean()
    return out
