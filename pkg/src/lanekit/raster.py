"""BEV raster container, graph rasterization, distance transforms,
point-cloud lowest-z filtering, vehicle-layer encoding, crops, and the
BVR1 binary file format.

A raster is anchored at its producing frame's origin: pixel (row, col) has
its center at origin + (col + 0.5, row + 0.5) * resolution.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import errors
from . import _kernels
from .graph import Frame, LaneGraph

__all__ = [
    "BevRaster",
    "PointCloud",
    "VehicleBox",
    "rasterize_graph",
    "distance_transform",
    "accumulate_lowest_z",
    "encode_vehicle_layer",
    "extract_crop",
    "write_bvr",
    "read_bvr",
    "pixel_of",
]

_DTYPES = {"u8": np.uint8, "f32": np.float32}
_DTYPE_CODES = {"u8": 0, "f32": 1}
_CODE_DTYPES = {0: "u8", 1: "f32"}


class BevRaster:
    """Multi-channel bird's-eye-view grid at a fixed metric resolution.

    ``channels`` is an ordered list of (name, plane) pairs; planes are
    row-major 2-D arrays of dtype uint8 or float32.  Immutable by convention.
    """

    def __init__(self, width_px, height_px, resolution_m_per_px, channels):
        if width_px <= 0 or height_px <= 0:
            raise errors.ValidationError("raster dimensions must be positive")
        if resolution_m_per_px <= 0:
            raise errors.ValidationError("resolution must be positive")
        names = set()
        clean = []
        for name, plane in channels:
            if len(name.encode("ascii")) > 16:
                raise errors.ValidationError(f"channel name '{name}' exceeds 16 bytes")
            if name in names:
                raise errors.ValidationError(f"duplicate channel name '{name}'")
            names.add(name)
            plane = np.asarray(plane)
            if plane.dtype not in (np.uint8, np.float32):
                raise errors.ValidationError(
                    f"channel '{name}' dtype {plane.dtype} not in (u8, f32)")
            if plane.shape != (height_px, width_px):
                raise errors.ValidationError(
                    f"channel '{name}' shape {plane.shape} != ({height_px}, {width_px})")
            clean.append((name, plane))
        self.width_px = int(width_px)
        self.height_px = int(height_px)
        self.resolution_m_per_px = float(resolution_m_per_px)
        self.channels = clean

    def channel(self, name: str) -> np.ndarray:
        for n, plane in self.channels:
            if n == name:
                return plane
        raise KeyError(name)

    def channel_names(self) -> list[str]:
        return [n for n, _ in self.channels]

    @property
    def width_m(self) -> float:
        return self.width_px * self.resolution_m_per_px

    @property
    def height_m(self) -> float:
        return self.height_px * self.resolution_m_per_px

    def __eq__(self, other):
        return (isinstance(other, BevRaster)
                and self.width_px == other.width_px
                and self.height_px == other.height_px
                and self.resolution_m_per_px == other.resolution_m_per_px
                and self.channel_names() == other.channel_names()
                and all(a.dtype == b.dtype and np.array_equal(a, b)
                        for (_, a), (_, b) in zip(self.channels, other.channels)))

    def __repr__(self):
        return (f"BevRaster({self.width_px}x{self.height_px} px @ "
                f"{self.resolution_m_per_px} m/px, "
                f"channels={self.channel_names()})")


@dataclass
class PointCloud:
    """Accumulated LiDAR points: (n, 4) float64 columns x_m, y_m, z_m, intensity."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 4)
        if pts.size and not np.isfinite(pts[:, :3]).all():
            raise errors.ValidationError("point coordinates must be finite")
        self.points = pts

    def __len__(self):
        return len(self.points)

    def to_csv(self) -> bytes:
        lines = ["x_m,y_m,z_m,intensity"]
        for x, y, z, t in self.points:
            lines.append(f"{float(x)!r},{float(y)!r},{float(z)!r},{float(t)!r}")
        return ("\n".join(lines) + "\n").encode("ascii")

    @classmethod
    def from_csv(cls, data) -> "PointCloud":
        if isinstance(data, bytes):
            data = data.decode("ascii")
        lines = [ln for ln in data.splitlines() if ln.strip()]
        if not lines or lines[0].split(",")[:4] != ["x_m", "y_m", "z_m", "intensity"]:
            raise errors.ParseError("point-cloud CSV must start with header "
                                    "'x_m,y_m,z_m,intensity'")
        rows = []
        for i, ln in enumerate(lines[1:], start=2):
            parts = ln.split(",")
            if len(parts) != 4:
                raise errors.ParseError(f"line {i}: expected 4 fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise errors.ParseError(f"line {i}: non-numeric field") from None
        return cls(np.asarray(rows, dtype=np.float64).reshape(-1, 4))


@dataclass
class VehicleBox:
    """Oriented vehicle bounding box in the ground plane."""

    center_x_m: float
    center_y_m: float
    length_m: float
    width_m: float
    heading_rad: float = 0.0

    def __post_init__(self):
        if self.length_m <= 0 or self.width_m <= 0:
            raise errors.ValidationError("box extent must be positive")
        self.heading_rad = self.heading_rad % (2.0 * math.pi)


def _frame_shape(frame: Frame, resolution: float) -> tuple[int, int]:
    w = int(round(frame.width_m / resolution))
    h = int(round(frame.height_m / resolution))
    if w <= 0 or h <= 0:
        raise errors.EmptyFrame(
            f"frame {frame.width_m} x {frame.height_m} m yields no pixels at "
            f"{resolution} m/px")
    return h, w


def _segments(g: LaneGraph) -> np.ndarray:
    segs = np.empty((len(g.edges), 4), dtype=np.float64)
    for i, e in enumerate(g.edges):
        a, b = g.node(e.src), g.node(e.dst)
        segs[i] = (a.x_m, a.y_m, b.x_m, b.y_m)
    return segs


def rasterize_graph(g: LaneGraph, resolution: float = 0.2,
                    lane_width_m: float = 1.8) -> BevRaster:
    """Render the graph edges as a binary u8 mask channel named ``lane``.

    A pixel is set iff its center lies within lane_width_m / 2 of some edge
    (round caps).  The raster covers the graph frame.
    """
    if resolution <= 0 or lane_width_m <= 0:
        raise errors.ValidationError("resolution and lane width must be positive")
    h, w = _frame_shape(g.frame, resolution)
    radius = lane_width_m / 2.0
    dist2, _ = _kernels.segment_distance_field(
        _segments(g), h, w, g.frame.origin_x_m, g.frame.origin_y_m,
        resolution, radius)
    mask = (dist2 <= radius * radius).astype(np.uint8)
    return BevRaster(w, h, resolution, [("lane", mask)])


def distance_transform(mask: np.ndarray, gaussian_sigma_px: float = 0.0) -> np.ndarray:
    """Exact per-pixel Euclidean distance (in pixels) to the nearest set pixel,
    optionally Gaussian-smoothed afterwards (kernel truncated at 3 sigma).

    Returns a float32 plane; all-background input gives +inf everywhere.
    """
    d = np.sqrt(_kernels.edt_sq(np.asarray(mask)))
    if gaussian_sigma_px > 0 and np.isfinite(d).all():
        d = ndimage.gaussian_filter(d, gaussian_sigma_px, truncate=3.0)
    return d.astype(np.float32)


def accumulate_lowest_z(cloud: PointCloud, cell_m: float) -> PointCloud:
    """Keep, per occupied ground cell, only the point with the lowest z.

    Cells are cell_m x cell_m squares anchored at the world origin.  Ties go
    to the earliest point in input order; output cells appear in
    first-occurrence order.
    """
    if not cell_m > 0:
        raise errors.NonPositiveCell(f"cell_m={cell_m}")
    pts = cloud.points
    n = len(pts)
    if n == 0:
        return PointCloud(pts.copy())
    kx = np.floor(pts[:, 0] / cell_m).astype(np.int64)
    ky = np.floor(pts[:, 1] / cell_m).astype(np.int64)
    # group by cell, lowest z first, input order breaking z ties
    order = np.lexsort((np.arange(n), pts[:, 2], ky, kx))
    starts = np.ones(n, dtype=bool)
    starts[1:] = ((kx[order][1:] != kx[order][:-1])
                  | (ky[order][1:] != ky[order][:-1]))
    group_starts = np.flatnonzero(starts)
    winner = order[group_starts]
    first_seen = np.minimum.reduceat(order, group_starts)
    return PointCloud(pts[winner[np.argsort(first_seen, kind="stable")]])


def encode_vehicle_layer(boxes, frame: Frame, resolution: float) -> np.ndarray:
    """Rasterize oriented vehicle boxes to a float32 heading layer.

    Pixels outside every box are -1; pixels whose center falls inside a box
    get heading / 2*pi in [0, 1).  Later boxes overwrite earlier ones.
    """
    if resolution <= 0:
        raise errors.ValidationError("resolution must be positive")
    h, w = _frame_shape(frame, resolution)
    layer = np.full((h, w), -1.0, dtype=np.float64)
    for box in boxes:
        half_diag = math.hypot(box.length_m, box.width_m) / 2.0
        c0 = max(int(math.ceil((box.center_x_m - half_diag - frame.origin_x_m)
                               / resolution - 0.5)), 0)
        c1 = min(int(math.floor((box.center_x_m + half_diag - frame.origin_x_m)
                                / resolution - 0.5)), w - 1)
        r0 = max(int(math.ceil((box.center_y_m - half_diag - frame.origin_y_m)
                               / resolution - 0.5)), 0)
        r1 = min(int(math.floor((box.center_y_m + half_diag - frame.origin_y_m)
                                / resolution - 0.5)), h - 1)
        if c0 > c1 or r0 > r1:
            continue
        px = frame.origin_x_m + (np.arange(c0, c1 + 1) + 0.5) * resolution
        py = frame.origin_y_m + (np.arange(r0, r1 + 1) + 0.5) * resolution
        gx, gy = np.meshgrid(px - box.center_x_m, py - box.center_y_m)
        cos_h, sin_h = math.cos(box.heading_rad), math.sin(box.heading_rad)
        u = gx * cos_h + gy * sin_h       # along the box length
        v = -gx * sin_h + gy * cos_h      # across the box width
        inside = (np.abs(u) <= box.length_m / 2.0) & (np.abs(v) <= box.width_m / 2.0)
        layer[r0:r1 + 1, c0:c1 + 1][inside] = box.heading_rad / (2.0 * math.pi)
    return layer.astype(np.float32)


def extract_crop(r: BevRaster, origin_px: tuple[int, int], size_px: int) -> BevRaster:
    """Square crop of all channels; ``origin_px`` is (row, col) of the top-left."""
    row, col = origin_px
    if size_px <= 0:
        raise errors.OutOfBounds(f"crop size {size_px} not positive")
    if (row < 0 or col < 0 or row + size_px > r.height_px
            or col + size_px > r.width_px):
        raise errors.OutOfBounds(
            f"crop ({row}, {col}) + {size_px} px exceeds raster "
            f"{r.height_px} x {r.width_px}")
    channels = [(n, plane[row:row + size_px, col:col + size_px].copy())
                for n, plane in r.channels]
    return BevRaster(size_px, size_px, r.resolution_m_per_px, channels)


def pixel_of(x_m: float, y_m: float, resolution: float,
             width_px: int, height_px: int) -> tuple[int, int]:
    """(row, col) of the pixel containing a frame-relative point.

    Points on the far boundary fall into the last pixel; points outside the
    raster raise OutOfFrame.
    """
    if not (0.0 <= x_m <= width_px * resolution
            and 0.0 <= y_m <= height_px * resolution):
        raise errors.OutOfFrame(f"point ({x_m}, {y_m})")
    col = min(int(x_m / resolution), width_px - 1)
    row = min(int(y_m / resolution), height_px - 1)
    return row, col


# --- BVR1 binary format ------------------------------------------------------

_MAGIC = b"BVR1"
_HEAD = struct.Struct("<III d")
_CHAN = struct.Struct("<16s B")


def write_bvr(r: BevRaster) -> bytes:
    """Serialize to the little-endian BVR1 byte layout (no compression)."""
    parts = [_MAGIC,
             _HEAD.pack(r.width_px, r.height_px, len(r.channels),
                        r.resolution_m_per_px)]
    for name, plane in r.channels:
        code = _DTYPE_CODES["u8" if plane.dtype == np.uint8 else "f32"]
        parts.append(_CHAN.pack(name.encode("ascii"), code))
    for _, plane in r.channels:
        if plane.dtype == np.uint8:
            parts.append(plane.tobytes())
        else:
            parts.append(plane.astype("<f4", copy=False).tobytes())
    return b"".join(parts)


def read_bvr(data: bytes) -> BevRaster:
    """Parse BVR1 bytes; the round trip through :func:`write_bvr` is bit-exact."""
    if len(data) < 4 or data[:4] != _MAGIC:
        raise errors.BadMagic(f"expected magic {_MAGIC!r}")
    off = 4
    if len(data) < off + _HEAD.size:
        raise errors.TruncatedFile("header truncated")
    width, height, n_chan, resolution = _HEAD.unpack_from(data, off)
    off += _HEAD.size
    entries = []
    for _ in range(n_chan):
        if len(data) < off + _CHAN.size:
            raise errors.TruncatedFile("channel directory truncated")
        raw_name, code = _CHAN.unpack_from(data, off)
        off += _CHAN.size
        if code not in _CODE_DTYPES:
            raise errors.UnknownDtype(code)
        try:
            name = raw_name.rstrip(b"\x00").decode("ascii")
        except UnicodeDecodeError:
            raise errors.ParseError("channel name is not ASCII") from None
        entries.append((name, _CODE_DTYPES[code]))
    channels = []
    count = width * height
    for name, dt in entries:
        nbytes = count * (1 if dt == "u8" else 4)
        if len(data) < off + nbytes:
            raise errors.TruncatedFile(f"plane '{name}' truncated")
        if dt == "u8":
            plane = np.frombuffer(data, np.uint8, count, off).reshape(height, width)
        else:
            plane = np.frombuffer(data, "<f4", count, off).astype(np.float32) \
                .reshape(height, width)
        off += nbytes
        channels.append((name, plane.copy()))
    return BevRaster(width, height, resolution, channels)
