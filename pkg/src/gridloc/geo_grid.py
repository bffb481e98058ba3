"""Bounding boxes, n x n lattices with row-major cell labels, and great-circle distance.

Cells are numbered from 1 in the north-west corner, advancing eastward along a
row and then southward row by row::

    G1        G2        ...  Gn
    Gn+1      Gn+2      ...  G2n
    ...
    Gn*n-n+1  ...            Gn*n
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0088
KM_PER_MILE = 1.609344

# Lattice side -> radius in miles, as tabulated for the US corpus.
TABULATED_RADIUS_MILES = {8: 120.0, 11: 100.0, 16: 60.0, 32: 30.0}


class GridError(ValueError):
    pass


class OutOfBoundsError(GridError):
    pass


class InvalidLabelError(GridError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self):
        lat, lon = float(self.latitude), float(self.longitude)
        if not -90.0 <= lat <= 90.0:
            raise GridError(f"latitude {self.latitude!r} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise GridError(f"longitude {self.longitude!r} outside [-180, 180]")
        object.__setattr__(self, "latitude", lat)
        object.__setattr__(self, "longitude", lon)


@dataclass(frozen=True)
class GeoBoundingBox:
    lat_max: float
    lat_min: float
    lon_max: float
    lon_min: float

    def __post_init__(self):
        for name in ("lat_max", "lat_min", "lon_max", "lon_min"):
            object.__setattr__(self, name, float(getattr(self, name)))
        # corner validation goes through GeoPoint
        GeoPoint(self.lat_max, self.lon_max)
        GeoPoint(self.lat_min, self.lon_min)
        if not self.lat_max > self.lat_min:
            raise GridError(f"lat_max {self.lat_max} must exceed lat_min {self.lat_min}")
        if not self.lon_max > self.lon_min:
            raise GridError(f"lon_max {self.lon_max} must exceed lon_min {self.lon_min}")

    def contains(self, p: GeoPoint) -> bool:
        return (self.lat_min <= p.latitude <= self.lat_max
                and self.lon_min <= p.longitude <= self.lon_max)

    @property
    def center(self) -> GeoPoint:
        return GeoPoint((self.lat_max + self.lat_min) / 2, (self.lon_max + self.lon_min) / 2)


# Continental US extraction box.
US_BBOX = GeoBoundingBox(lat_max=83.162102, lat_min=5.49955,
                         lon_max=-52.23304, lon_min=-167.276413)


@dataclass(frozen=True)
class LatticeSpec:
    bbox: GeoBoundingBox
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise GridError(f"lattice side must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def cell_count(self) -> int:
        return self.n * self.n

    @property
    def cell_height(self) -> float:
        return (self.bbox.lat_max - self.bbox.lat_min) / self.n

    @property
    def cell_width(self) -> float:
        return (self.bbox.lon_max - self.bbox.lon_min) / self.n

    def labels(self) -> range:
        return range(1, self.cell_count + 1)


def format_label(index: int) -> str:
    return f"G{index}"


def parse_label(text) -> int:
    """Accept ``37``, ``"37"`` or ``"G37"``."""
    s = str(text).strip()
    if s[:1] in ("G", "g"):
        s = s[1:]
    try:
        return int(s)
    except ValueError:
        raise InvalidLabelError(f"cannot parse grid label {text!r}") from None


def _check_label(index: int, lattice: LatticeSpec) -> int:
    if isinstance(index, bool) or int(index) != index or not 1 <= index <= lattice.cell_count:
        raise InvalidLabelError(
            f"label {index!r} outside G1..G{lattice.cell_count} for a {lattice.n}x{lattice.n} lattice")
    return int(index)


def grid_index(p: GeoPoint, lattice: LatticeSpec) -> int:
    """Row-major label of the cell holding ``p``.

    A point on an interior gridline goes to the cell south/east of it; points on
    the southern or eastern edge of the box are clamped into the last row/column.
    """
    box = lattice.bbox
    if not box.lat_min <= p.latitude <= box.lat_max:
        raise OutOfBoundsError(
            f"latitude {p.latitude} outside [{box.lat_min}, {box.lat_max}]")
    if not box.lon_min <= p.longitude <= box.lon_max:
        raise OutOfBoundsError(
            f"longitude {p.longitude} outside [{box.lon_min}, {box.lon_max}]")
    n, h, w = lattice.n, lattice.cell_height, lattice.cell_width
    row = min(max(math.floor((box.lat_max - p.latitude) / h), 0), n - 1)
    col = min(max(math.floor((p.longitude - box.lon_min) / w), 0), n - 1)
    # the division can round across a gridline; settle against the edges grid_bounds uses
    while row < n - 1 and p.latitude <= box.lat_max - (row + 1) * h:
        row += 1
    while row > 0 and p.latitude > box.lat_max - row * h:
        row -= 1
    while col < n - 1 and p.longitude >= box.lon_min + (col + 1) * w:
        col += 1
    while col > 0 and p.longitude < box.lon_min + col * w:
        col -= 1
    return row * n + col + 1


def _row_col(index: int, lattice: LatticeSpec) -> tuple[int, int]:
    return divmod(_check_label(index, lattice) - 1, lattice.n)


def grid_bounds(index: int, lattice: LatticeSpec) -> GeoBoundingBox:
    row, col = _row_col(index, lattice)
    box, n = lattice.bbox, lattice.n
    h, w = lattice.cell_height, lattice.cell_width
    # outer edges come straight from the box so the cells tile it exactly
    lat_max = box.lat_max if row == 0 else box.lat_max - row * h
    lat_min = box.lat_min if row == n - 1 else box.lat_max - (row + 1) * h
    lon_min = box.lon_min if col == 0 else box.lon_min + col * w
    lon_max = box.lon_max if col == n - 1 else box.lon_min + (col + 1) * w
    return GeoBoundingBox(lat_max=lat_max, lat_min=lat_min, lon_max=lon_max, lon_min=lon_min)


def grid_centroid(index: int, lattice: LatticeSpec) -> GeoPoint:
    row, col = _row_col(index, lattice)
    box = lattice.bbox
    return GeoPoint(box.lat_max - (row + 0.5) * lattice.cell_height,
                    box.lon_min + (col + 0.5) * lattice.cell_width)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometres on a sphere of mean Earth radius."""
    lat1, lon1 = math.radians(a.latitude), math.radians(a.longitude)
    lat2, lon2 = math.radians(b.latitude), math.radians(b.longitude)
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def km_to_miles(km: float) -> float:
    return km / KM_PER_MILE


def radius_for_lattice(n: int, bbox: GeoBoundingBox = US_BBOX) -> tuple[float, bool]:
    """Return ``(radius_miles, computed)``.

    The four tabulated lattices return their fixed radius with ``computed=False``.
    Any other side length gets half the cell diagonal, measured with an
    equirectangular approximation at the box's mid-latitude.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise GridError(f"lattice side must be a positive integer, got {n!r}")
    if n in TABULATED_RADIUS_MILES:
        return TABULATED_RADIUS_MILES[n], False
    lattice = LatticeSpec(bbox, int(n))
    mid_lat = math.radians((bbox.lat_max + bbox.lat_min) / 2)
    height_km = math.radians(lattice.cell_height) * EARTH_RADIUS_KM
    width_km = math.radians(lattice.cell_width) * EARTH_RADIUS_KM * math.cos(mid_lat)
    return km_to_miles(math.hypot(height_km, width_km) / 2), True


def cell_diagonal_km(lattice: LatticeSpec) -> float:
    """Longest corner-to-corner cell distance across all rows of the lattice."""
    best = 0.0
    for row in range(lattice.n):
        b = grid_bounds(row * lattice.n + 1, lattice)
        best = max(best,
                   haversine_distance(GeoPoint(b.lat_max, b.lon_min), GeoPoint(b.lat_min, b.lon_max)),
                   haversine_distance(GeoPoint(b.lat_min, b.lon_min), GeoPoint(b.lat_max, b.lon_max)))
    return best


def cell_radius_km(index: int, lattice: LatticeSpec) -> float:
    """Farthest distance from a cell's centroid to any point of the cell.

    On the sphere this is the largest centroid-to-corner distance; it can exceed
    half the corner-to-corner great-circle distance.
    """
    b = grid_bounds(index, lattice)
    c = grid_centroid(index, lattice)
    return max(haversine_distance(c, GeoPoint(lat, lon))
               for lat in (b.lat_max, b.lat_min) for lon in (b.lon_min, b.lon_max))
