"""Fixed-timestep differential-drive simulation core.

The robot is a disc of radius ``robot_radius`` driven by unicycle
kinematics. Stepping is a pure function of (state, command, grid, config),
which is the determinism basis for session replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, clamp, normalize_angle
from .maps import OccupancyGrid


@dataclass(frozen=True)
class SimConfig:
    """Physical constants of the simulated robot (nominal TurtleBot 2)."""

    dt: float = 0.02
    v_max: float = 0.65
    omega_max: float = math.pi
    robot_radius: float = 0.18
    proximity_range: float = 0.35
    proximity_fov: float = 2.0 * math.pi / 3.0

    def __post_init__(self) -> None:
        for name in ("dt", "v_max", "omega_max", "robot_radius", "proximity_range", "proximity_fov"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DriveInput:
    """Trackpad thumb position; both axes clamped to [-1, 1]."""

    y_axis: float = 0.0  # forward/back
    x_axis: float = 0.0  # turn left/right (positive = thumb right)

    def __post_init__(self) -> None:
        object.__setattr__(self, "y_axis", clamp(self.y_axis, -1.0, 1.0))
        object.__setattr__(self, "x_axis", clamp(self.x_axis, -1.0, 1.0))


@dataclass(frozen=True)
class VelocityCommand:
    v: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    linear_vel: float = 0.0
    angular_vel: float = 0.0
    tick: int = 0
    proximity_blocked: bool = False


def disc_overlaps(grid: OccupancyGrid, x: float, y: float, radius: float) -> bool:
    """True iff a disc at (x, y) overlaps any occupied cell (strict)."""
    if grid.occ_x.size == 0:
        return False
    h = grid.resolution / 2.0
    qx = np.clip(x, grid.occ_x - h, grid.occ_x + h)
    qy = np.clip(y, grid.occ_y - h, grid.occ_y + h)
    d2 = (x - qx) ** 2 + (y - qy) ** 2
    return bool(np.min(d2) < radius * radius)


def proximity_check(grid: OccupancyGrid, state: RobotState, cfg: SimConfig) -> bool:
    """Forward-sector proximity sensor.

    Reports True when an occupied cell comes within ``proximity_range`` of
    the robot perimeter inside the forward sector of half-angle
    ``proximity_fov / 2``. A cell counts if its closest point to the robot
    (or one of its corners) is both in range and in the sector.
    """
    if grid.occ_x.size == 0:
        return False
    cx, cy, theta = state.pose.x, state.pose.y, state.pose.theta
    reach = cfg.robot_radius + cfg.proximity_range
    half_fov = cfg.proximity_fov / 2.0
    h = grid.resolution / 2.0

    qx = np.clip(cx, grid.occ_x - h, grid.occ_x + h)
    qy = np.clip(cy, grid.occ_y - h, grid.occ_y + h)
    candidates = [
        (qx, qy),
        (grid.occ_x - h, grid.occ_y - h),
        (grid.occ_x + h, grid.occ_y - h),
        (grid.occ_x - h, grid.occ_y + h),
        (grid.occ_x + h, grid.occ_y + h),
    ]
    for px, py in candidates:
        dx = px - cx
        dy = py - cy
        within = dx * dx + dy * dy < reach * reach
        if not np.any(within):
            continue
        bearing = np.arctan2(dy[within], dx[within]) - theta
        bearing = np.arctan2(np.sin(bearing), np.cos(bearing))  # wrap to (-pi, pi]
        if np.any(np.abs(bearing) <= half_fov):
            return True
    return False


def apply_direct_control(inp: DriveInput, blocked: bool, cfg: SimConfig) -> VelocityCommand:
    """Map trackpad axes to a velocity command.

    When the proximity sensor is triggered the forward component is gated
    off: the operator is restricted to turning or reversing.
    """
    v = inp.y_axis * cfg.v_max
    if blocked:
        v = min(v, 0.0)
    omega = -inp.x_axis * cfg.omega_max
    return VelocityCommand(v, omega)


def step(state: RobotState, cmd: VelocityCommand, grid: OccupancyGrid, cfg: SimConfig) -> RobotState:
    """Advance the robot one timestep.

    Unicycle integration; a translation that would overlap an occupied cell
    is rejected and the robot keeps its prior position with linear_vel = 0
    (rotation still applies). The returned state carries the proximity
    sensor reading at the new pose.
    """
    if abs(cmd.v) > cfg.v_max + 1e-9 or abs(cmd.omega) > cfg.omega_max + 1e-9:
        raise ValueError("velocity command exceeds configured limits")
    pose = state.pose
    nx = pose.x + cmd.v * math.cos(pose.theta) * cfg.dt
    ny = pose.y + cmd.v * math.sin(pose.theta) * cfg.dt
    ntheta = normalize_angle(pose.theta + cmd.omega * cfg.dt)

    if disc_overlaps(grid, nx, ny, cfg.robot_radius):
        new_pose = Pose2D(pose.x, pose.y, ntheta)
        v_out = 0.0
    else:
        new_pose = Pose2D(nx, ny, ntheta)
        v_out = cmd.v

    nxt = RobotState(
        pose=new_pose,
        linear_vel=v_out,
        angular_vel=cmd.omega,
        tick=state.tick + 1,
        proximity_blocked=False,
    )
    blocked = proximity_check(grid, nxt, cfg)
    if blocked:
        nxt = RobotState(nxt.pose, nxt.linear_vel, nxt.angular_vel, nxt.tick, True)
    return nxt


def initial_state(grid: OccupancyGrid, cfg: SimConfig) -> RobotState:
    """Robot at the map start pose with the sensor evaluated."""
    st = RobotState(pose=grid.start_pose)
    if proximity_check(grid, st, cfg):
        st = RobotState(st.pose, 0.0, 0.0, 0, True)
    return st
