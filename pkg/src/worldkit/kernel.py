"""Reference world model over a stochastic gridworld.

Exact transition distributions, a deterministic egocentric renderer,
a reward model, seeded rollouts, and a shortest-plan search. All
functions are pure over immutable inputs; randomness enters only
through an explicitly passed generator.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import AHEAD, RIGHT, TURN_LEFT, TURN_RIGHT, Heading, ObservationFrame, Pose, digest64


class KernelError(ValueError):
    """Invalid map, state, or action."""


class Cell(Enum):
    FREE = "Free"
    WALL = "Wall"
    GOAL = "Goal"


_CHAR_TO_CELL = {"#": Cell.WALL, ".": Cell.FREE, "G": Cell.GOAL, "S": Cell.FREE}

# Render palette. Out-of-map cells draw as walls; the center pixel is
# always the agent marker.
PIXEL_WALL = 0
PIXEL_GOAL = 170
PIXEL_AGENT = 85
PIXEL_FREE = 255
_CELL_TO_PIXEL = {Cell.WALL: PIXEL_WALL, Cell.FREE: PIXEL_FREE, Cell.GOAL: PIXEL_GOAL}
PIXEL_TO_CELL = {v: k for k, v in _CELL_TO_PIXEL.items()}

DEMO_MAP_TEXT = "#####\n#S..#\n#.#.#\n#..G#\n#####"


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    cells: tuple[Cell, ...]
    start: tuple[int, int]

    def cell(self, x: int, y: int) -> Cell:
        """Out-of-bounds coordinates read as Wall."""
        if 0 <= x < self.width and 0 <= y < self.height:
            return self.cells[y * self.width + x]
        return Cell.WALL

    def is_wall(self, x: int, y: int) -> bool:
        return self.cell(x, y) == Cell.WALL

    def goal_cells(self) -> list[tuple[int, int]]:
        return [(x, y) for y in range(self.height) for x in range(self.width)
                if self.cells[y * self.width + x] == Cell.GOAL]

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            chars = []
            for x in range(self.width):
                c = self.cells[y * self.width + x]
                if (x, y) == self.start:
                    chars.append("S")
                elif c == Cell.WALL:
                    chars.append("#")
                elif c == Cell.GOAL:
                    chars.append("G")
                else:
                    chars.append(".")
            rows.append("".join(chars))
        return "\n".join(rows)

    @classmethod
    def from_text(cls, text: str) -> "GridMap":
        rows = [line for line in text.strip("\n").split("\n")]
        if len(rows) < 3 or any(len(r) != len(rows[0]) for r in rows):
            raise KernelError("map must be a rectangle of at least 3x3 cells")
        width, height = len(rows[0]), len(rows)
        cells: list[Cell] = []
        start = None
        for y, row in enumerate(rows):
            for x, ch in enumerate(row):
                if ch not in _CHAR_TO_CELL:
                    raise KernelError(f"unknown map character {ch!r} at ({x},{y})")
                if ch == "S":
                    if start is not None:
                        raise KernelError("map declares more than one start cell")
                    start = (x, y)
                cells.append(_CHAR_TO_CELL[ch])
        if start is None:
            raise KernelError("map has no start cell")
        grid = cls(width, height, tuple(cells), start)
        for x in range(width):
            if not grid.is_wall(x, 0) or not grid.is_wall(x, height - 1):
                raise KernelError("map border must be all walls")
        for y in range(height):
            if not grid.is_wall(0, y) or not grid.is_wall(width - 1, y):
                raise KernelError("map border must be all walls")
        if not grid.goal_cells():
            raise KernelError("map has no goal cell")
        if not _goal_reachable(grid):
            raise KernelError("no goal reachable from start")
        return grid


def _goal_reachable(grid: GridMap) -> bool:
    seen = {grid.start}
    queue = deque([grid.start])
    while queue:
        x, y = queue.popleft()
        if grid.cell(x, y) == Cell.GOAL:
            return True
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (x + dx, y + dy)
            if nxt not in seen and not grid.is_wall(*nxt):
                seen.add(nxt)
                queue.append(nxt)
    return False


@dataclass(frozen=True)
class WorldState:
    pose: Pose
    step: int = 0
    terminal: bool = False


@dataclass(frozen=True)
class KernelConfig:
    p_slip: float = 0.2
    step_cost: float = -0.01
    goal_reward: float = 1.0
    window_radius: int = 2

    def __post_init__(self):
        if not 0.0 <= self.p_slip < 1.0:
            raise KernelError(f"p_slip must be in [0, 1), got {self.p_slip}")
        if self.window_radius < 1:
            raise KernelError(f"window_radius must be >= 1, got {self.window_radius}")


@dataclass(frozen=True)
class TransitionDist:
    outcomes: tuple[tuple[WorldState, float], ...]

    def __post_init__(self):
        total = 0.0
        states = set()
        for state, prob in self.outcomes:
            if prob <= 0.0:
                raise KernelError(f"outcome probability must be positive, got {prob}")
            total += prob
            states.add(state)
        if abs(total - 1.0) > 1e-12:
            raise KernelError(f"outcome probabilities sum to {total!r}, not 1")
        if len(states) != len(self.outcomes):
            raise KernelError("outcome states must be distinct")


MOVE_FORWARD, MOVE_BACKWARD, MOVE_LEFT, MOVE_RIGHT, TURN_LEFT_ID, TURN_RIGHT_ID = range(6)
ACTION_COUNT = 6
_MOVE_ACTIONS = (MOVE_FORWARD, MOVE_BACKWARD, MOVE_LEFT, MOVE_RIGHT)


def _move_delta(action: int, heading: Heading) -> tuple[int, int]:
    ax, ay = AHEAD[heading]
    rx, ry = RIGHT[heading]
    if action == MOVE_FORWARD:
        return ax, ay
    if action == MOVE_BACKWARD:
        return -ax, -ay
    if action == MOVE_LEFT:
        return -rx, -ry
    return rx, ry


def initial_state(grid: GridMap, heading: Heading = Heading.E) -> WorldState:
    """Episode start: the map's start cell, facing east by convention."""
    x, y = grid.start
    return WorldState(Pose(x, y, heading))


def transition_distribution(state: WorldState, action: int, cfg: KernelConfig,
                            grid: GridMap) -> TransitionDist:
    """Exact successor distribution for one action.

    Turns are deterministic. Moves reach the intended cell with
    probability 1 - p_slip and slip to "stay" otherwise; moves into
    walls (or off the map) are blocked and stay with certainty. The
    step counter advances in every outcome.
    """
    if state.terminal:
        raise KernelError("cannot transition from a terminal state")
    if not 0 <= action < ACTION_COUNT:
        raise KernelError(f"action id {action} out of range")
    pose = state.pose
    if action in (TURN_LEFT_ID, TURN_RIGHT_ID):
        table = TURN_LEFT if action == TURN_LEFT_ID else TURN_RIGHT
        turned = WorldState(Pose(pose.x, pose.y, table[pose.heading]), state.step + 1)
        return TransitionDist(((turned, 1.0),))

    dx, dy = _move_delta(action, pose.heading)
    dest = (pose.x + dx, pose.y + dy)
    stay = WorldState(Pose(pose.x, pose.y, pose.heading), state.step + 1)
    if grid.is_wall(*dest):
        return TransitionDist(((stay, 1.0),))
    moved = WorldState(
        Pose(dest[0], dest[1], pose.heading),
        state.step + 1,
        terminal=grid.cell(*dest) == Cell.GOAL,
    )
    if cfg.p_slip == 0.0:
        return TransitionDist(((moved, 1.0),))
    return TransitionDist(((moved, 1.0 - cfg.p_slip), (stay, cfg.p_slip)))


def sample_transition(state: WorldState, action: int, cfg: KernelConfig, grid: GridMap,
                      rng: np.random.Generator) -> WorldState:
    """Draw one successor using a single uniform variate."""
    dist = transition_distribution(state, action, cfg, grid)
    u = rng.random()
    acc = 0.0
    for outcome, prob in dist.outcomes:
        acc += prob
        if u < acc:
            return outcome
    return dist.outcomes[-1][0]


def observe(state: WorldState, cfg: KernelConfig, grid: GridMap) -> ObservationFrame:
    """Egocentric window, rotated so the agent's heading points up.

    Pixel (i, j) shows the world cell at offset u*right + v*ahead from
    the agent, where u = i - r and v = r - j. The center pixel is
    overwritten with the agent marker.
    """
    r = cfg.window_radius
    size = 2 * r + 1
    pose = state.pose
    ax, ay = AHEAD[pose.heading]
    rx, ry = RIGHT[pose.heading]
    pixels = bytearray(size * size)
    for j in range(size):
        for i in range(size):
            u, v = i - r, r - j
            cell = grid.cell(pose.x + u * rx + v * ax, pose.y + u * ry + v * ay)
            pixels[j * size + i] = _CELL_TO_PIXEL[cell]
    pixels[r * size + r] = PIXEL_AGENT
    return ObservationFrame(size, size, bytes(pixels))


def reward(state: WorldState, action: int, next_state: WorldState, cfg: KernelConfig) -> float:
    """Goal reward on entering a goal cell, step cost otherwise."""
    if next_state.terminal and not state.terminal:
        return cfg.goal_reward
    return cfg.step_cost


def frame_digest(frame: ObservationFrame) -> str:
    return digest64(frame.pixels)


@dataclass(frozen=True)
class TrajectoryStep:
    action: int
    state: WorldState
    frame: ObservationFrame
    reward: float


@dataclass(frozen=True)
class Trajectory:
    initial_state: WorldState
    initial_frame: ObservationFrame
    steps: tuple[TrajectoryStep, ...]

    @property
    def final_state(self) -> WorldState:
        return self.steps[-1].state if self.steps else self.initial_state

    @property
    def cumulative_reward(self) -> float:
        total = 0.0
        for step in self.steps:
            total += step.reward
        return total


def trajectory_log(trajectory: Trajectory) -> str:
    """One JSON record per step: turn, action id, state, reward, frame digest."""
    lines = []
    for turn, step in enumerate(trajectory.steps):
        pose = step.state.pose
        lines.append(json.dumps({
            "turn": turn,
            "action": step.action,
            "state": {"x": pose.x, "y": pose.y, "heading": pose.heading.value,
                      "step": step.state.step, "terminal": step.state.terminal},
            "reward": step.reward,
            "frame_digest": frame_digest(step.frame),
        }, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n" if lines else ""


def rollout(state: WorldState, actions: list[int], cfg: KernelConfig, grid: GridMap,
            seed: int) -> Trajectory:
    """Apply actions sequentially with a seeded generator; stop at terminal."""
    rng = np.random.default_rng(seed)
    steps = []
    current = state
    for action in actions:
        nxt = sample_transition(current, action, cfg, grid, rng)
        steps.append(TrajectoryStep(action, nxt, observe(nxt, cfg, grid), reward(current, action, nxt, cfg)))
        current = nxt
        if current.terminal:
            break
    return Trajectory(state, observe(state, cfg, grid), tuple(steps))


def shortest_action_plan(state: WorldState, grid: GridMap) -> list[int] | None:
    """Breadth-first search over (x, y, heading) under slip-free dynamics.

    Returns a shortest action-id sequence reaching any goal cell, the
    empty list when already on one, or None when no goal is reachable.
    Actions expand in template order, so the result is deterministic.
    """
    start = (state.pose.x, state.pose.y, state.pose.heading)
    if grid.cell(start[0], start[1]) == Cell.GOAL:
        return []
    seen = {start}
    queue = deque([(start, [])])
    while queue:
        (x, y, heading), plan = queue.popleft()
        for action in range(ACTION_COUNT):
            if action in _MOVE_ACTIONS:
                dx, dy = _move_delta(action, heading)
                nx, ny, nh = x + dx, y + dy, heading
                if grid.is_wall(nx, ny):
                    continue  # blocked moves stay put and never shorten a plan
            else:
                table = TURN_LEFT if action == TURN_LEFT_ID else TURN_RIGHT
                nx, ny, nh = x, y, table[heading]
            if grid.cell(nx, ny) == Cell.GOAL:
                return plan + [action]
            key = (nx, ny, nh)
            if key not in seen:
                seen.add(key)
                queue.append((key, plan + [action]))
    return None


def random_grid_map(rng: np.random.Generator, max_width: int = 9, max_height: int = 9,
                    wall_density: float = 0.25) -> GridMap:
    """Random bordered map with a reachable goal; rejection-sampled."""
    while True:
        width = int(rng.integers(5, max_width + 1))
        height = int(rng.integers(5, max_height + 1))
        rows = [["#"] * width for _ in range(height)]
        interior = [(x, y) for y in range(1, height - 1) for x in range(1, width - 1)]
        for x, y in interior:
            rows[y][x] = "#" if rng.random() < wall_density else "."
        free = [(x, y) for x, y in interior if rows[y][x] == "."]
        if len(free) < 2:
            continue
        sx, sy = free[int(rng.integers(len(free)))]
        rows[sy][sx] = "S"
        candidates = [(x, y) for x, y in free if (x, y) != (sx, sy)]
        gx, gy = candidates[int(rng.integers(len(candidates)))]
        rows[gy][gx] = "G"
        try:
            return GridMap.from_text("\n".join("".join(r) for r in rows))
        except KernelError:
            continue
