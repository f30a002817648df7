"""Explicit structured representation: occupancy fusion, exports, raycast depth.

The 2D grid lifts to 3D as unit-cube walls over z in [0, 1], so point
and depth exports stay exactly checkable while speaking the structured
vocabulary downstream consumers expect (points, depth maps, poses,
masks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .core import AHEAD, RIGHT, ObservationFrame, Pose
from .kernel import PIXEL_AGENT, PIXEL_TO_CELL, Cell


class RepresentationError(ValueError):
    """Fusion conflict or invalid camera/ray setup."""


class CellState(Enum):
    UNKNOWN = "Unknown"
    FREE = "Free"
    WALL = "Wall"
    GOAL = "Goal"


_CELL_TO_STATE = {Cell.FREE: CellState.FREE, Cell.WALL: CellState.WALL, Cell.GOAL: CellState.GOAL}

# Raycast horizon, in cell units.
MAX_RAY_DISTANCE = 100.0
NO_HIT = -1.0


@dataclass(frozen=True)
class DepthMap:
    rays: int
    fov: float
    depths: tuple[float, ...]

    def __post_init__(self):
        if len(self.depths) != self.rays:
            raise RepresentationError(f"depth map declares {self.rays} rays, carries {len(self.depths)}")
        for d in self.depths:
            if d < 0 and d != NO_HIT:
                raise RepresentationError(f"depth must be >= 0 or the no-hit sentinel, got {d}")


@dataclass(frozen=True)
class RepresentationOutput:
    points: tuple[tuple[float, float, float], ...]
    poses: tuple[Pose, ...]
    masks: tuple[bool, ...]
    depth: DepthMap | None = None


class OccupancyGrid:
    """Session-owned fused world map; cells never change class once known."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.cells: list[CellState] = [CellState.UNKNOWN] * (width * height)
        self.observed_count: list[int] = [0] * (width * height)
        self.poses: list[Pose] = []

    def cell(self, x: int, y: int) -> CellState:
        if 0 <= x < self.width and 0 <= y < self.height:
            return self.cells[y * self.width + x]
        return CellState.UNKNOWN

    def known_count(self) -> int:
        return sum(1 for c in self.cells if c != CellState.UNKNOWN)

    def fuse_observation(self, frame: ObservationFrame, pose: Pose) -> "OccupancyGrid":
        """Invert the egocentric window mapping and write cell classes.

        The agent-marker center pixel is skipped, window cells falling
        outside the map are ignored, and a known cell changing class is
        a hard corruption error.
        """
        if frame.width != frame.height or frame.width % 2 == 0:
            raise RepresentationError(
                f"expected an odd square egocentric window, got {frame.width}x{frame.height}"
            )
        r = frame.width // 2
        ax, ay = AHEAD[pose.heading]
        rx, ry = RIGHT[pose.heading]
        writes: list[tuple[int, CellState]] = []
        for j in range(frame.height):
            for i in range(frame.width):
                if i == r and j == r:
                    continue
                u, v = i - r, r - j
                x = pose.x + u * rx + v * ax
                y = pose.y + u * ry + v * ay
                if not (0 <= x < self.width and 0 <= y < self.height):
                    continue
                value = frame.pixel(i, j)
                if value == PIXEL_AGENT or value not in PIXEL_TO_CELL:
                    raise RepresentationError(f"unexpected pixel value {value} at window ({i},{j})")
                state = _CELL_TO_STATE[PIXEL_TO_CELL[value]]
                idx = y * self.width + x
                known = self.cells[idx]
                if known != CellState.UNKNOWN and known != state:
                    raise RepresentationError(
                        f"fusion conflict at ({x},{y}): {known.value} vs {state.value}"
                    )
                writes.append((idx, state))
        # All checks passed; commit.
        for idx, state in writes:
            self.cells[idx] = state
            self.observed_count[idx] += 1
        self.poses.append(pose)
        return self


def export_points(grid: OccupancyGrid) -> RepresentationOutput:
    """One point per known wall cell, centered in its unit cube."""
    points = tuple(
        (x + 0.5, y + 0.5, 0.5)
        for y in range(grid.height)
        for x in range(grid.width)
        if grid.cells[y * grid.width + x] == CellState.WALL
    )
    masks = tuple(c != CellState.UNKNOWN for c in grid.cells)
    return RepresentationOutput(points=points, poses=tuple(grid.poses), masks=masks)


WKPC_VERSION = 1


def to_wkpc(points: tuple[tuple[float, float, float], ...]) -> str:
    """Versioned point-cloud text: header line, then fixed 6-decimal rows."""
    lines = [f"WKPC {WKPC_VERSION} {len(points)}"]
    lines.extend(f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in points)
    return "\n".join(lines) + "\n"


def from_wkpc(text: str) -> tuple[tuple[float, float, float], ...]:
    lines = text.strip("\n").split("\n")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "WKPC" or header[1] != str(WKPC_VERSION):
        raise RepresentationError(f"bad WKPC header: {lines[0]!r}")
    count = int(header[2])
    if len(lines) - 1 != count:
        raise RepresentationError(f"WKPC declares {count} points, carries {len(lines) - 1}")
    return tuple(tuple(float(v) for v in line.split()) for line in lines[1:])


def ray_direction(yaw_deg: float) -> tuple[float, float]:
    """Unit direction for a yaw in degrees; yaw 0 points north (-y)."""
    rad = math.radians(yaw_deg)
    return math.sin(rad), -math.cos(rad)


def render_depth(grid: OccupancyGrid, camera: tuple[float, float], yaw: float,
                 rays: int, fov: float) -> DepthMap:
    """Cast a fan of rays with incremental grid traversal.

    Ray k leaves at yaw - fov/2 + fov*(k+1/2)/rays. Depth is the
    Euclidean ray parameter at first entry into a known wall cell;
    unknown cells read as free, and rays exceeding the horizon report
    the no-hit sentinel.
    """
    if rays < 1:
        raise RepresentationError(f"need at least one ray, got {rays}")
    if fov <= 0:
        raise RepresentationError(f"fov must be positive, got {fov}")
    cx, cy = camera
    if grid.cell(math.floor(cx), math.floor(cy)) == CellState.WALL:
        raise RepresentationError(f"camera ({cx},{cy}) is inside a wall cell")
    depths = tuple(
        _cast_ray(grid, cx, cy, yaw - fov / 2.0 + fov * (k + 0.5) / rays)
        for k in range(rays)
    )
    return DepthMap(rays=rays, fov=fov, depths=depths)


def _cast_ray(grid: OccupancyGrid, ox: float, oy: float, yaw_deg: float) -> float:
    dx, dy = ray_direction(yaw_deg)
    x_cell, y_cell = math.floor(ox), math.floor(oy)

    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    # Parameter t at which the ray crosses the next vertical / horizontal
    # cell boundary, and the t advance per whole cell.
    if dx != 0.0:
        next_vx = x_cell + 1 if dx > 0 else x_cell
        t_max_x = (next_vx - ox) / dx
        t_delta_x = 1.0 / abs(dx)
    else:
        t_max_x = math.inf
        t_delta_x = math.inf
    if dy != 0.0:
        next_hy = y_cell + 1 if dy > 0 else y_cell
        t_max_y = (next_hy - oy) / dy
        t_delta_y = 1.0 / abs(dy)
    else:
        t_max_y = math.inf
        t_delta_y = math.inf

    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            x_cell += step_x
        else:
            t = t_max_y
            t_max_y += t_delta_y
            y_cell += step_y
        if t > MAX_RAY_DISTANCE:
            return NO_HIT
        if grid.cell(x_cell, y_cell) == CellState.WALL:
            return t
