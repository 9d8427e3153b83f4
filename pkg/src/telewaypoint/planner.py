"""Autonomous local navigation: inflation, A*, smoothing, pure pursuit.

Grid path costs are tracked as exact (straight, diagonal) step counts so
that optimality checks against an independent Dijkstra need no tolerance:
two grid paths have equal cost iff their step counts match, because
a + b*sqrt(2) determines (a, b) uniquely for integers.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Point2D, clamp, normalize_angle
from .maps import OCCUPIED, OccupancyGrid
from .simcore import RobotState, SimConfig, VelocityCommand

SQRT2 = math.sqrt(2.0)

CM_FREE = 0
CM_INFLATED = 1
CM_OCCUPIED = 2


class GoalUnreachable(RuntimeError):
    """No traversable route from start to goal."""


class GoalBlocked(RuntimeError):
    """The goal cell itself is occupied or inflated."""


@dataclass(frozen=True)
class PlannerConfig:
    lookahead: float = 0.5
    heading_gain: float = 2.0
    arrive_tolerance: float = 0.15
    # robot_radius + 2 cells at the default resolution: wide enough that a
    # traversable cell keeps the whole disc clear of walls with margin for
    # pure-pursuit tracking error.
    inflation_radius: float = 0.68


@dataclass(eq=False)
class Costmap:
    width_cells: int
    height_cells: int
    resolution: float
    cells: np.ndarray  # (H, W) of CM_FREE / CM_INFLATED / CM_OCCUPIED

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width_cells and 0 <= row < self.height_cells

    def traversable(self, col: int, row: int) -> bool:
        return self.in_bounds(col, row) and self.cells[row, col] == CM_FREE

    def blocked_world(self, x: float, y: float) -> bool:
        col = int(math.floor(x / self.resolution))
        row = int(math.floor(y / self.resolution))
        return not self.traversable(col, row)

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution)))

    def cell_center(self, col: int, row: int) -> Point2D:
        return ((col + 0.5) * self.resolution, (row + 0.5) * self.resolution)


@dataclass(eq=False)
class Path:
    """Ordered world-frame waypoints from robot position to target."""

    waypoints: list[Point2D]
    total_length: float
    # pre-smoothing optimal grid cost as (straight, diagonal) step counts
    grid_steps: tuple[int, int] = (0, 0)

    @property
    def grid_cost(self) -> float:
        return self.grid_steps[0] + self.grid_steps[1] * SQRT2


def inflate(grid: OccupancyGrid, radius: float) -> Costmap:
    """Mark every cell within ``radius`` (center-to-center) of an obstacle.

    radius = 0 degenerates to the raw grid (no inflated cells).
    """
    if radius < 0:
        raise ValueError("inflation radius must be >= 0")
    occupied = grid.cells == OCCUPIED
    r_cells = radius / grid.resolution
    reach = int(math.floor(r_cells + 1e-9))
    inflated = np.zeros_like(occupied)
    h, w = occupied.shape
    for dj in range(-reach, reach + 1):
        for di in range(-reach, reach + 1):
            if math.hypot(di, dj) > r_cells + 1e-9:
                continue
            src = occupied[
                max(0, -dj) : h - max(0, dj),
                max(0, -di) : w - max(0, di),
            ]
            inflated[
                max(0, dj) : h - max(0, -dj),
                max(0, di) : w - max(0, -di),
            ] |= src
    cells = np.zeros_like(grid.cells)
    cells[inflated] = CM_INFLATED
    cells[occupied] = CM_OCCUPIED
    return Costmap(grid.width_cells, grid.height_cells, grid.resolution, cells)


# -- exact step-count cost arithmetic ----------------------------------------

def cost_lt(c1: tuple[int, int], c2: tuple[int, int]) -> bool:
    """Exact comparison of a1 + b1*sqrt(2) < a2 + b2*sqrt(2)."""
    da = c1[0] - c2[0]
    db = c1[1] - c2[1]
    if da <= 0 and db <= 0:
        return da < 0 or db < 0
    if da >= 0 and db >= 0:
        return False
    if da > 0:  # db < 0: da < -db*sqrt(2) ?
        return da * da < 2 * db * db
    # da < 0, db > 0: db*sqrt(2) < -da ?
    return 2 * db * db < da * da


def cost_float(c: tuple[int, int]) -> float:
    return c[0] + c[1] * SQRT2


# -- supercover grid traversal ------------------------------------------------

def supercover_cells(p0: Point2D, p1: Point2D, resolution: float) -> list[tuple[int, int]]:
    """All cells the segment p0->p1 passes through (conservative at corners)."""
    x0, y0 = p0
    x1, y1 = p1
    col = int(math.floor(x0 / resolution))
    row = int(math.floor(y0 / resolution))
    col1 = int(math.floor(x1 / resolution))
    row1 = int(math.floor(y1 / resolution))
    cells = [(col, row)]
    dx = x1 - x0
    dy = y1 - y0
    step_c = 1 if dx > 0 else -1
    step_r = 1 if dy > 0 else -1
    if dx != 0:
        next_vx = (col + (1 if dx > 0 else 0)) * resolution
        t_max_x = (next_vx - x0) / dx
        t_dx = resolution / abs(dx)
    else:
        t_max_x = math.inf
        t_dx = math.inf
    if dy != 0:
        next_vy = (row + (1 if dy > 0 else 0)) * resolution
        t_max_y = (next_vy - y0) / dy
        t_dy = resolution / abs(dy)
    else:
        t_max_y = math.inf
        t_dy = math.inf

    guard = 4 * (abs(col1 - col) + abs(row1 - row)) + 8
    while (col, row) != (col1, row1) and guard > 0:
        guard -= 1
        if abs(t_max_x - t_max_y) < 1e-12:
            # exact corner: include both side cells, then step diagonally
            cells.append((col + step_c, row))
            cells.append((col, row + step_r))
            col += step_c
            row += step_r
            t_max_x += t_dx
            t_max_y += t_dy
        elif t_max_x < t_max_y:
            col += step_c
            t_max_x += t_dx
        else:
            row += step_r
            t_max_y += t_dy
        cells.append((col, row))
    return cells


def line_of_sight(costmap: Costmap, p0: Point2D, p1: Point2D) -> bool:
    """Segment traversability check on the costmap."""
    for col, row in supercover_cells(p0, p1, costmap.resolution):
        if not costmap.traversable(col, row):
            return False
    return True


# -- A* ------------------------------------------------------------------------

_NEIGHBORS = (
    (1, 0, (1, 0)),
    (-1, 0, (1, 0)),
    (0, 1, (1, 0)),
    (0, -1, (1, 0)),
    (1, 1, (0, 1)),
    (1, -1, (0, 1)),
    (-1, 1, (0, 1)),
    (-1, -1, (0, 1)),
)


def plan(costmap: Costmap, start: Point2D, goal: Point2D) -> Path:
    """A* over 8-connected traversable cells, then line-of-sight smoothing.

    Straight steps cost 1, diagonals sqrt(2); diagonal moves may not cut
    corners past blocked cells. Ties are broken by the lower (y, x) of the
    expanded cell. The start cell is treated as traversable even when
    inflated so the robot can escape a cell it legitimately occupies.
    """
    start_cell = costmap.cell_index(*start)
    goal_cell = costmap.cell_index(*goal)
    if not costmap.in_bounds(*start_cell) or costmap.cells[start_cell[1], start_cell[0]] == CM_OCCUPIED:
        raise GoalUnreachable("start position is inside an obstacle")
    if not costmap.traversable(*goal_cell):
        raise GoalBlocked("goal cell is occupied or inflated")

    if start == goal:
        return Path([start], 0.0, (0, 0))
    if start_cell == goal_cell:
        return Path([start, goal], math.dist(start, goal), (0, 0))

    def passable(col: int, row: int) -> bool:
        return costmap.traversable(col, row) or (col, row) == start_cell

    def heuristic(col: int, row: int) -> float:
        return math.hypot(col - goal_cell[0], row - goal_cell[1])

    g: dict[tuple[int, int], tuple[int, int]] = {start_cell: (0, 0)}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    open_heap: list[tuple[float, int, int]] = [(heuristic(*start_cell), start_cell[1], start_cell[0])]
    closed: set[tuple[int, int]] = set()

    goal_steps: tuple[int, int] | None = None
    while open_heap:
        _, row, col = heapq.heappop(open_heap)
        cell = (col, row)
        if cell in closed:
            continue
        closed.add(cell)
        if cell == goal_cell:
            goal_steps = g[cell]
            break
        gc = g[cell]
        for di, dj, step_cost in _NEIGHBORS:
            ncol, nrow = col + di, row + dj
            if not passable(ncol, nrow):
                continue
            if di != 0 and dj != 0:
                # no corner cutting through blocked diagonals
                if not (passable(col + di, row) and passable(col, row + dj)):
                    continue
            ng = (gc[0] + step_cost[0], gc[1] + step_cost[1])
            old = g.get((ncol, nrow))
            if old is None or cost_lt(ng, old):
                g[(ncol, nrow)] = ng
                came[(ncol, nrow)] = cell
                f = cost_float(ng) + heuristic(ncol, nrow)
                heapq.heappush(open_heap, (f, nrow, ncol))

    if goal_steps is None:
        raise GoalUnreachable("no traversable route to goal")

    cell_path = [goal_cell]
    while cell_path[-1] != start_cell:
        cell_path.append(came[cell_path[-1]])
    cell_path.reverse()

    waypoints: list[Point2D] = [start]
    waypoints.extend(costmap.cell_center(c, r) for c, r in cell_path[1:-1])
    waypoints.append(goal)
    smoothed = smooth(costmap, waypoints)
    return Path(smoothed, _polyline_length(smoothed), goal_steps)


def smooth(costmap: Costmap, waypoints: list[Point2D]) -> list[Point2D]:
    """Greedy line-of-sight shortcutting; never longer, endpoints kept."""
    if len(waypoints) <= 2:
        return list(waypoints)
    out = [waypoints[0]]
    i = 0
    last = len(waypoints) - 1
    while i < last:
        j = last
        while j > i + 1 and not line_of_sight(costmap, waypoints[i], waypoints[j]):
            j -= 1
        out.append(waypoints[j])
        i = j
    return out


def _polyline_length(points: list[Point2D]) -> float:
    return sum(math.dist(points[k], points[k + 1]) for k in range(len(points) - 1))


# -- pure pursuit ---------------------------------------------------------------

def _project_progress(waypoints: list[Point2D], x: float, y: float) -> tuple[int, float]:
    """Closest point on the polyline as (segment index, param in [0, 1])."""
    best = (0, 0.0)
    best_d2 = math.inf
    for k in range(len(waypoints) - 1):
        ax, ay = waypoints[k]
        bx, by = waypoints[k + 1]
        dx, dy = bx - ax, by - ay
        L2 = dx * dx + dy * dy
        t = 0.0 if L2 == 0 else clamp(((x - ax) * dx + (y - ay) * dy) / L2, 0.0, 1.0)
        px, py = ax + t * dx, ay + t * dy
        d2 = (x - px) ** 2 + (y - py) ** 2
        if d2 < best_d2:
            best_d2 = d2
            best = (k, t)
    return best


def _lookahead_point(waypoints: list[Point2D], x: float, y: float, lookahead: float) -> Point2D:
    if len(waypoints) == 1:
        return waypoints[0]
    seg, t = _project_progress(waypoints, x, y)
    # walk forward along the polyline until euclidean distance >= lookahead
    for k in range(seg, len(waypoints) - 1):
        ax, ay = waypoints[k]
        bx, by = waypoints[k + 1]
        t0 = t if k == seg else 0.0
        dx, dy = bx - ax, by - ay
        # smallest s in [t0, 1] with |a + s*d - robot| = lookahead
        fx, fy = ax - x, ay - y
        A = dx * dx + dy * dy
        B = 2 * (fx * dx + fy * dy)
        C = fx * fx + fy * fy - lookahead * lookahead
        if A > 0:
            disc = B * B - 4 * A * C
            if disc >= 0:
                root = (-B + math.sqrt(disc)) / (2 * A)
                if root >= t0 - 1e-12 and root <= 1.0 + 1e-12:
                    s = clamp(root, 0.0, 1.0)
                    if math.hypot(ax + s * dx - x, ay + s * dy - y) >= lookahead - 1e-9:
                        return (ax + s * dx, ay + s * dy)
        if math.hypot(bx - x, by - y) >= lookahead:
            return (bx, by)
    return waypoints[-1]


def follow(
    path: Path,
    state: RobotState,
    plan_cfg: PlannerConfig,
    sim_cfg: SimConfig,
) -> tuple[VelocityCommand, bool]:
    """Pure-pursuit command toward the path; (command, arrived).

    Speed tapers linearly to zero as heading error grows from 45 to 90
    degrees; beyond 90 degrees the robot rotates in place. Arrival within
    ``arrive_tolerance`` of the final waypoint yields (0, 0) and True.
    """
    if not path.waypoints:
        raise ValueError("empty path")
    x, y = state.pose.x, state.pose.y
    final = path.waypoints[-1]
    if math.hypot(final[0] - x, final[1] - y) <= plan_cfg.arrive_tolerance:
        return VelocityCommand(0.0, 0.0), True

    target = _lookahead_point(path.waypoints, x, y, plan_cfg.lookahead)
    heading_error = normalize_angle(math.atan2(target[1] - y, target[0] - x) - state.pose.theta)
    omega = clamp(plan_cfg.heading_gain * heading_error, -sim_cfg.omega_max, sim_cfg.omega_max)
    taper = clamp((math.pi / 2 - abs(heading_error)) / (math.pi / 4), 0.0, 1.0)
    v = sim_cfg.v_max * taper
    return VelocityCommand(v, omega), False
