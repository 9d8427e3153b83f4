"""Occupancy-grid worlds: ASCII map parsing and the map variant transforms.

Map format (UTF-8, LF line endings):
  - optional first line ``res=<meters>`` (cell resolution, default 0.25)
  - one row of cells per line: '#' occupied, '.' free, 'S' start (exactly
    one), 'T' goal (exactly one), '|' free cell marking the midline column
    (all '|' must share one column; used as the bonus-round delay trigger)

Row 0 of the text is row 0 of the grid; cell (col, row) has its center at
world coordinates ((col + 0.5) * res, (row + 0.5) * res).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .geometry import Point2D, Pose2D, normalize_angle

FREE = 0
OCCUPIED = 1

DEFAULT_RESOLUTION = 0.25
DEFAULT_GOAL_RADIUS = 0.30

_LEGAL_CHARS = frozenset("#.ST|")


class MalformedMap(ValueError):
    """Raised when map text violates the ASCII map format."""


@dataclass(eq=False)
class OccupancyGrid:
    """Rasterized 2D world with a start pose, goal region and midline."""

    width_cells: int
    height_cells: int
    resolution: float
    cells: np.ndarray  # (height_cells, width_cells), FREE / OCCUPIED
    start_pose: Pose2D
    goal_center: Point2D
    goal_radius: float = DEFAULT_GOAL_RADIUS
    midline_x: float = 0.0

    # derived occupied-cell center arrays, filled in __post_init__
    occ_x: np.ndarray = field(init=False, repr=False)
    occ_y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.width_cells <= 0 or self.height_cells <= 0:
            raise MalformedMap("grid dimensions must be positive")
        if self.resolution <= 0:
            raise MalformedMap("resolution must be positive")
        if self.cells.shape != (self.height_cells, self.width_cells):
            raise MalformedMap("cells array does not match grid dimensions")
        rows, cols = np.nonzero(self.cells == OCCUPIED)
        res = self.resolution
        self.occ_x = (cols + 0.5) * res
        self.occ_y = (rows + 0.5) * res

    # -- world geometry -----------------------------------------------------

    @property
    def width_m(self) -> float:
        return self.width_cells * self.resolution

    @property
    def height_m(self) -> float:
        return self.height_cells * self.resolution

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution)))

    def in_bounds_cell(self, col: int, row: int) -> bool:
        return 0 <= col < self.width_cells and 0 <= row < self.height_cells

    def in_bounds_world(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width_m and 0.0 <= y < self.height_m

    def is_occupied_cell(self, col: int, row: int) -> bool:
        return bool(self.cells[row, col] == OCCUPIED)

    def cell_center(self, col: int, row: int) -> Point2D:
        return ((col + 0.5) * self.resolution, (row + 0.5) * self.resolution)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.width_cells == other.width_cells
            and self.height_cells == other.height_cells
            and self.resolution == other.resolution
            and np.array_equal(self.cells, other.cells)
            and self.start_pose == other.start_pose
            and self.goal_center == other.goal_center
            and self.goal_radius == other.goal_radius
            and self.midline_x == other.midline_x
        )


def _aim_theta(src: Point2D, dst: Point2D) -> float:
    return normalize_angle(math.atan2(dst[1] - src[1], dst[0] - src[0]))


def load_map(text: str) -> OccupancyGrid:
    """Parse ASCII map text into an OccupancyGrid.

    Raises MalformedMap on ragged rows, illegal characters, a missing or
    duplicated 'S'/'T', or '|' markers spread over several columns.
    """
    lines = text.splitlines()
    resolution = DEFAULT_RESOLUTION
    if lines and lines[0].startswith("res="):
        try:
            resolution = float(lines[0][4:])
        except ValueError as exc:
            raise MalformedMap(f"bad resolution header: {lines[0]!r}") from exc
        if resolution <= 0:
            raise MalformedMap("resolution must be positive")
        lines = lines[1:]
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedMap("map has no rows")

    height = len(lines)
    width = len(lines[0])
    cells = np.zeros((height, width), dtype=np.uint8)
    start_cell: tuple[int, int] | None = None
    goal_cell: tuple[int, int] | None = None
    midline_col: int | None = None

    for row, line in enumerate(lines):
        if len(line) != width:
            raise MalformedMap(f"ragged row {row}: expected width {width}, got {len(line)}")
        for col, ch in enumerate(line):
            if ch not in _LEGAL_CHARS:
                raise MalformedMap(f"illegal character {ch!r} at row {row}, col {col}")
            if ch == "#":
                cells[row, col] = OCCUPIED
            elif ch == "S":
                if start_cell is not None:
                    raise MalformedMap("duplicate 'S'")
                start_cell = (col, row)
            elif ch == "T":
                if goal_cell is not None:
                    raise MalformedMap("duplicate 'T'")
                goal_cell = (col, row)
            elif ch == "|":
                if midline_col is None:
                    midline_col = col
                elif midline_col != col:
                    raise MalformedMap("'|' markers must share a single column")
    if start_cell is None:
        raise MalformedMap("missing 'S'")
    if goal_cell is None:
        raise MalformedMap("missing 'T'")

    start_xy = ((start_cell[0] + 0.5) * resolution, (start_cell[1] + 0.5) * resolution)
    goal_xy = ((goal_cell[0] + 0.5) * resolution, (goal_cell[1] + 0.5) * resolution)
    if midline_col is not None:
        midline_x = (midline_col + 0.5) * resolution
    else:
        midline_x = width * resolution / 2.0

    return OccupancyGrid(
        width_cells=width,
        height_cells=height,
        resolution=resolution,
        cells=cells,
        start_pose=Pose2D(start_xy[0], start_xy[1], _aim_theta(start_xy, goal_xy)),
        goal_center=goal_xy,
        goal_radius=DEFAULT_GOAL_RADIUS,
        midline_x=midline_x,
    )


def mirror_map(grid: OccupancyGrid) -> OccupancyGrid:
    """Reflect the world about its vertical axis (x -> width - x)."""
    width = grid.width_m
    sp = grid.start_pose
    return OccupancyGrid(
        width_cells=grid.width_cells,
        height_cells=grid.height_cells,
        resolution=grid.resolution,
        cells=np.flip(grid.cells, axis=1).copy(),
        start_pose=Pose2D(width - sp.x, sp.y, normalize_angle(math.pi - sp.theta)),
        goal_center=(width - grid.goal_center[0], grid.goal_center[1]),
        goal_radius=grid.goal_radius,
        midline_x=width - grid.midline_x,
    )


def reverse_map(grid: OccupancyGrid) -> OccupancyGrid:
    """Swap start and goal; the new start faces the new goal."""
    new_start_xy = grid.goal_center
    new_goal_xy = (grid.start_pose.x, grid.start_pose.y)
    return OccupancyGrid(
        width_cells=grid.width_cells,
        height_cells=grid.height_cells,
        resolution=grid.resolution,
        cells=grid.cells.copy(),
        start_pose=Pose2D(new_start_xy[0], new_start_xy[1], _aim_theta(new_start_xy, new_goal_xy)),
        goal_center=new_goal_xy,
        goal_radius=grid.goal_radius,
        midline_x=grid.midline_x,
    )


# -- bundled maps -----------------------------------------------------------

def list_bundled_maps() -> list[str]:
    root = resources.files("telewaypoint.maps")
    return sorted(p.name[: -len(".map")] for p in root.iterdir() if p.name.endswith(".map"))


def bundled_map_text(name: str) -> str:
    path = resources.files("telewaypoint.maps").joinpath(f"{name}.map")
    if not path.is_file():
        raise KeyError(f"unknown bundled map: {name}")
    return path.read_text(encoding="utf-8")


def load_bundled_map(name: str) -> OccupancyGrid:
    return load_map(bundled_map_text(name))
