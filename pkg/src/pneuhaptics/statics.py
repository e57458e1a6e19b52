"""Quasi-static pouch-actuator model.

A flat sealed pouch inflated at gauge pressure P and compressed to height H
bulges into two circular arcs. At constant pressure the blocked force against
the constraint is

    F(P, H) = P * L * max(0, W - pi*H/2)

where W is the flat pouch width and L the seam-to-seam chamber length. The
cross-section area enclosed at height H is A(H) = W*H - pi*H^2/4, which makes
the model self-consistent under virtual work: P * L * dA/dH = F. Contact
width (and force) vanish at the free height H = 2W/pi.

An alternative force law backed by a measured (pressure, height, force) grid
is provided for calibration against bench data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

DEFAULT_WIDTH = 13e-3    # m
DEFAULT_LENGTH = 13e-3   # m
DEFAULT_STROKE = 3.2e-3  # m, measured usable stroke of the fingertip build

# chamber id -> (row, col) on the 2x2 grid; 1=front-left, 2=front-right,
# 3=back-left, 4=back-right
DEFAULT_LAYOUT = {1: (0, 0), 2: (0, 1), 3: (1, 0), 4: (1, 1)}


@dataclass(frozen=True)
class ActuatorGeometry:
    """Planar pouch geometry and chamber arrangement."""

    width: float = DEFAULT_WIDTH
    length: float = DEFAULT_LENGTH
    chamber_count: int = 4
    layout: dict = field(default_factory=lambda: dict(DEFAULT_LAYOUT))
    stroke_limit: float | None = DEFAULT_STROKE

    def __post_init__(self):
        if self.width <= 0 or self.length <= 0:
            raise ConfigError("pouch width and length must be positive")
        if self.chamber_count < 1:
            raise ConfigError("chamber_count must be >= 1")
        if self.stroke_limit is not None and self.stroke_limit <= 0:
            raise ConfigError("stroke_limit must be positive when set")
        cells = set(self.layout.values())
        if len(self.layout) != self.chamber_count or len(cells) != self.chamber_count:
            raise ConfigError("layout must map each chamber id to a distinct grid cell")


@dataclass(frozen=True)
class ArcModel:
    """Constant-pressure circular-arc force law (the analytic default)."""


@dataclass(frozen=True)
class CalibrationTable:
    """Measured force law on a rectangular (pressure, height) grid.

    Queries are bilinear between nodes; exact table values are returned at
    the nodes themselves. Heights beyond the largest tabulated height are out
    of domain.
    """

    pressures: tuple          # Pa, ascending
    heights: tuple            # m, ascending
    forces: tuple             # row-major (len(pressures) x len(heights)), N

    def __post_init__(self):
        p = np.asarray(self.pressures, dtype=float)
        h = np.asarray(self.heights, dtype=float)
        f = np.asarray(self.forces, dtype=float)
        if p.ndim != 1 or h.ndim != 1 or len(p) < 2 or len(h) < 2:
            raise ConfigError("calibration table needs >= 2 pressures and >= 2 heights")
        if f.shape != (len(p), len(h)):
            raise ConfigError("calibration table is not rectangular in (P, H)")
        if np.any(np.diff(p) <= 0) or np.any(np.diff(h) <= 0):
            raise ConfigError("table axes must be strictly increasing")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ConfigError("table forces must be finite and non-negative")
        if np.any(np.diff(f, axis=1) > 1e-12):
            raise ConfigError("table force must be non-increasing in height at fixed pressure")

    def _grid(self):
        return (np.asarray(self.pressures, float),
                np.asarray(self.heights, float),
                np.asarray(self.forces, float))

    def force(self, pressure, height):
        p, h, f = self._grid()
        if np.any(pressure < p[0] - 1e-12) or np.any(pressure > p[-1] + 1e-12):
            raise DomainError("pressure outside calibration table range")
        # bilinear interpolation
        pi = np.clip(np.searchsorted(p, pressure) - 1, 0, len(p) - 2)
        hi = np.clip(np.searchsorted(h, height) - 1, 0, len(h) - 2)
        tp = (pressure - p[pi]) / (p[pi + 1] - p[pi])
        th = (height - h[hi]) / (h[hi + 1] - h[hi])
        f00 = f[pi, hi]
        f01 = f[pi, hi + 1]
        f10 = f[pi + 1, hi]
        f11 = f[pi + 1, hi + 1]
        return ((1 - tp) * (1 - th) * f00 + (1 - tp) * th * f01
                + tp * (1 - th) * f10 + tp * th * f11)

    @classmethod
    def from_csv(cls, path):
        """Load a table from CSV with header pressure_pa,height_m,force_n."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"pressure_pa", "height_m", "force_n"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ConfigError(f"{path}: expected header pressure_pa,height_m,force_n")
            for i, row in enumerate(reader):
                try:
                    rows.append((float(row["pressure_pa"]),
                                 float(row["height_m"]),
                                 float(row["force_n"])))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}: bad value on data row {i + 1}") from exc
        if not rows:
            raise ConfigError(f"{path}: empty calibration table")
        ps = sorted({r[0] for r in rows})
        hs = sorted({r[1] for r in rows})
        lookup = {(r[0], r[1]): r[2] for r in rows}
        if len(lookup) != len(ps) * len(hs):
            raise ConfigError(f"{path}: table is not a full rectangular (P, H) grid")
        forces = tuple(tuple(lookup[(p, h)] for h in hs) for p in ps)
        return cls(pressures=tuple(ps), heights=tuple(hs), forces=forces)


ARC = ArcModel()


def free_height(geom: ActuatorGeometry, law=ARC) -> float:
    """Height at which contact width (and blocked force) reaches zero."""
    if isinstance(law, CalibrationTable):
        return float(max(law.heights))
    return 2.0 * geom.width / np.pi


def _check_height(height, geom, law):
    hmax = free_height(geom, law)
    if np.any(np.asarray(height) < 0) or np.any(np.asarray(height) > hmax * (1 + 1e-12)):
        raise DomainError(f"height outside [0, {hmax:.6g}] m")


def blocked_force(pressure, height, geom: ActuatorGeometry, law=ARC):
    """Force against a rigid constraint at gauge pressure `pressure` and height `height`.

    Accepts scalars or numpy arrays; arrays broadcast elementwise.
    """
    if np.any(np.asarray(pressure) < 0):
        raise DomainError("pressure must be non-negative")
    _check_height(height, geom, law)
    if isinstance(law, CalibrationTable):
        return law.force(pressure, height)
    contact = np.maximum(0.0, geom.width - np.pi * np.asarray(height) / 2.0)
    out = np.asarray(pressure) * geom.length * contact
    return float(out) if np.isscalar(pressure) and np.isscalar(height) else out


def cross_section_area(height, geom: ActuatorGeometry):
    """Enclosed cross-section area A(H) = W*H - pi*H^2/4 of one chamber."""
    _check_height(height, geom, ARC)
    h = np.asarray(height, dtype=float)
    out = geom.width * h - np.pi * h * h / 4.0
    return float(out) if np.isscalar(height) else out


def chamber_volume(height, geom: ActuatorGeometry):
    """Geometric chamber volume at height H (area times chamber length)."""
    return cross_section_area(height, geom) * geom.length


def multi_chamber_force(pressure, height, k: int, geom: ActuatorGeometry, law=ARC):
    """Total force with k chambers driven in parallel at the same (P, H)."""
    if not 1 <= k <= geom.chamber_count:
        raise DomainError(f"k must be in [1, {geom.chamber_count}]")
    return k * blocked_force(pressure, height, geom, law)
