"""Great-circle distances and coordinate-grid ingestion.

Converts point coordinates (census block groups, candidate facility sites)
into the dense distance tables the network model needs.  Distances use the
haversine form, which stays accurate for nearby points where the spherical
law of cosines loses precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0088  # IUGG mean Earth radius


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    population: float | None = None
    land_area: float | None = None  # square miles

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 < self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside (-180, 180]")


def haversine(a: GeoPoint, b: GeoPoint, r: float = EARTH_RADIUS_KM) -> float:
    """Great-circle distance in km between two points given in degrees."""
    if r <= 0:
        raise ValueError(f"sphere radius must be positive, got {r}")
    phi_a, phi_b = math.radians(a.lat), math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(dlam / 2.0) ** 2
    return 2.0 * r * math.asin(min(1.0, math.sqrt(s)))


def pairwise_km(origins: Sequence[GeoPoint], destinations: Sequence[GeoPoint],
                r: float = EARTH_RADIUS_KM) -> np.ndarray:
    """|origins| x |destinations| matrix of great-circle distances in km."""
    if len(origins) == 0 or len(destinations) == 0:
        return np.zeros((len(origins), len(destinations)))
    o = np.radians([[p.lat, p.lon] for p in origins])
    d = np.radians([[p.lat, p.lon] for p in destinations])
    phi1 = o[:, 0][:, None]
    phi2 = d[:, 0][None, :]
    dphi = phi2 - phi1
    dlam = d[:, 1][None, :] - o[:, 1][:, None]
    s = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * r * np.arcsin(np.minimum(1.0, np.sqrt(s)))


@dataclass
class GriddedDistances:
    """Distance tables (km) between named tiers, plus area populations."""

    res_drop: dict[str, dict[str, float]]
    drop_pri: dict[str, dict[str, float]]
    pri_sec: dict[str, dict[str, float]]
    population: dict[str, float]


def grid_to_areas(points: dict[str, GeoPoint], dropoffs: dict[str, GeoPoint],
                  primaries: dict[str, GeoPoint], secondaries: dict[str, GeoPoint],
                  r: float = EARTH_RADIUS_KM) -> GriddedDistances:
    """Turn coordinate lists into the three tier-adjacent distance tables.

    Each point becomes one residence area (keyed by its id) carrying its
    population attribute; facility tiers must be non-empty.
    """
    for tier, table in (("dropoffs", dropoffs), ("primaries", primaries),
                        ("secondaries", secondaries)):
        if not table:
            raise ValueError(f"empty facility tier: {tier}")
    if not points:
        raise ValueError("no residence points")

    def table_of(origins: dict[str, GeoPoint], dests: dict[str, GeoPoint]) -> dict:
        okeys, dkeys = list(origins), list(dests)
        m = pairwise_km([origins[k] for k in okeys], [dests[k] for k in dkeys], r)
        return {a: {b: float(m[i, j]) for j, b in enumerate(dkeys)}
                for i, a in enumerate(okeys)}

    return GriddedDistances(
        res_drop=table_of(points, dropoffs),
        drop_pri=table_of(dropoffs, primaries),
        pri_sec=table_of(primaries, secondaries),
        population={k: (p.population or 0.0) for k, p in points.items()},
    )
