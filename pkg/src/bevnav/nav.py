"""Agent state, A* grid planning, and the high-level navigation ops.

Heading convention: degrees, 0 = north (decreasing row), 90 = east
(increasing column), normalized to (-180, 180]; positive turn angles are
clockwise (turn right). The agent teleports along planned paths but the
trajectory records every cell visited.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .instances import InstanceMap, MaskRecord
from .locate import (
    ORDER_LEFT_TO_RIGHT,
    ORDER_NEAREST,
    LocalizationError,
    ObjAttr,
    approach_cell,
    fine_position,
    resolve,
)

SQRT2 = math.sqrt(2.0)
DEFAULT_CLEARANCE_M = 0.5
SIDE_TOLERANCE_DEG = 15.0
SUCCESS_THRESHOLD_M = 1.0


class PlanningError(RuntimeError):
    pass


def normalize_deg(angle: float) -> float:
    a = math.fmod(angle, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def heading_vec(heading_deg: float) -> tuple[float, float]:
    """Unit (drow, dcol) for a heading."""
    rad = math.radians(heading_deg)
    return -math.cos(rad), math.sin(rad)


def bearing_deg(src: tuple[int, int], dst: tuple[float, float]) -> float:
    """Heading that points from src toward dst."""
    drow = dst[0] - src[0]
    dcol = dst[1] - src[1]
    return normalize_deg(math.degrees(math.atan2(dcol, -drow)))


@dataclass
class AgentState:
    cell: tuple[int, int]
    heading_deg: float = 0.0


@dataclass
class TrajectoryStep:
    cell: tuple[int, int]
    heading_deg: float
    event: str


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)

    def append(self, cell, heading, event):
        self.steps.append(TrajectoryStep(tuple(cell), float(heading), event))

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [s.cell for s in self.steps]

    def stop_events(self) -> list[TrajectoryStep]:
        return [s for s in self.steps if s.event == "stop"]


_NEIGHBORS = [
    (-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
    (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2),
]


def octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    return max(dr, dc) + (SQRT2 - 1.0) * min(dr, dc)


def plan_path(
    start: tuple[int, int], goal: tuple[int, int], occupancy: np.ndarray
) -> list[tuple[int, int]]:
    """A* on the 8-connected grid (diagonal cost sqrt(2), octile
    heuristic). Raises PlanningError when no path exists."""
    if occupancy[start]:
        raise PlanningError(f"start cell {start} is not traversable")
    if start == goal:
        return [start]
    if occupancy[goal]:
        raise PlanningError(f"goal cell {goal} is not traversable")
    h, w = occupancy.shape
    g = {start: 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    heap = [(octile(start, goal), counter, start)]
    closed = set()
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur == goal:
            path = [cur]
            while cur in came:
                cur = came[cur]
                path.append(cur)
            return path[::-1]
        if cur in closed:
            continue
        closed.add(cur)
        cr, cc = cur
        for dr, dc, cost in _NEIGHBORS:
            nr, nc = cr + dr, cc + dc
            if not (0 <= nr < h and 0 <= nc < w) or occupancy[nr, nc]:
                continue
            nxt = (nr, nc)
            tentative = g[cur] + cost
            if tentative < g.get(nxt, math.inf) - 1e-12:
                g[nxt] = tentative
                came[nxt] = cur
                counter += 1
                heapq.heappush(heap, (tentative + octile(nxt, goal), counter, nxt))
    raise PlanningError(f"goal {goal} unreachable from {start}")


def path_cost(path: list[tuple[int, int]]) -> float:
    return sum(
        SQRT2 if (a[0] != b[0] and a[1] != b[1]) else 1.0
        for a, b in zip(path, path[1:])
    )


def check_success(
    stop_cell: tuple[int, int],
    target_cell: tuple[int, int],
    cell_size_s: float,
    stopped: bool = True,
    threshold_m: float = SUCCESS_THRESHOLD_M,
) -> bool:
    """A subgoal succeeds only with an explicit stop within the threshold."""
    if not stopped:
        return False
    dist = math.hypot(stop_cell[0] - target_cell[0], stop_cell[1] - target_cell[1])
    return dist * cell_size_s <= threshold_m


@dataclass
class ResolvedObj:
    """What get_obj_attributes hands back: the attribute triple plus the
    underlying record."""

    name: str
    label_id: int
    color: str
    record: MaskRecord


class Agent:
    """Executes high-level navigation calls over a finalized InstanceMap."""

    def __init__(
        self,
        imap: InstanceMap,
        occupancy: np.ndarray,
        start_cell: tuple[int, int],
        heading_deg: float = 0.0,
        clearance_m: float = DEFAULT_CLEARANCE_M,
    ):
        self.imap = imap
        self.occupancy = occupancy
        self.state = AgentState(tuple(start_cell), normalize_deg(heading_deg))
        self.clearance_m = clearance_m
        self.trajectory = Trajectory()
        self._contour: list[float] | None = None
        self._contour_step = 0
        self.trajectory.append(self.state.cell, self.state.heading_deg, "start")

    # -- helpers -----------------------------------------------------------

    @property
    def cell_size(self) -> float:
        return self.imap.bundle.grid.cell_size_s

    @property
    def _clearance_cells(self) -> int:
        return int(math.ceil(self.clearance_m / self.cell_size))

    def _resolve(self, obj) -> MaskRecord:
        if isinstance(obj, ResolvedObj):
            return obj.record
        if isinstance(obj, MaskRecord):
            return obj
        attr = obj if isinstance(obj, ObjAttr) else ObjAttr(*obj)
        ordering = ORDER_LEFT_TO_RIGHT if attr.instance_idx >= 1 else ORDER_NEAREST
        return resolve(attr, self.imap, self.state.cell, ordering)

    def _record_path(self, path, event="move"):
        for cell in path[1:]:
            self.trajectory.append(cell, self.state.heading_deg, event)

    def _goto(self, goal: tuple[int, int]):
        path = plan_path(self.state.cell, goal, self.occupancy)
        if len(path) > 1:
            self.state.heading_deg = bearing_deg(path[-2], path[-1])
        self.state.cell = path[-1]
        self._record_path(path)

    def _approach(self, cell: tuple[int, int]) -> tuple[int, int]:
        return approach_cell(cell, self.occupancy, self.cell_size)

    # -- movement ----------------------------------------------------------

    def move_to(self, pos: tuple[int, int]):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_to")
        self._goto(tuple(pos))

    def move_to_object(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_to_object")
        record = self._resolve(obj)
        goal = fine_position(record, self.imap)
        self._goto(self._approach(goal))
        self.state.heading_deg = bearing_deg(self.state.cell, goal)

    def move_forward(self, dist_m: float) -> bool:
        """Move along the current heading, stopping early at obstacles.
        Negative distances move backward. Returns False when fully blocked."""
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_forward")
        n = math.floor(abs(dist_m) / self.cell_size + 0.5)
        if n == 0:
            return True
        dr, dc = heading_vec(self.state.heading_deg)
        if dist_m < 0:
            dr, dc = -dr, -dc
        r0, c0 = self.state.cell
        h, w = self.occupancy.shape
        moved = []
        for i in range(1, n + 1):
            cell = (int(round(r0 + i * dr)), int(round(c0 + i * dc)))
            if not (0 <= cell[0] < h and 0 <= cell[1] < w) or self.occupancy[cell]:
                break
            if cell != (moved[-1] if moved else (r0, c0)):
                moved.append(cell)
        for cell in moved:
            self.trajectory.append(cell, self.state.heading_deg, "move")
        if moved:
            self.state.cell = moved[-1]
        return bool(moved) or n == 0

    def stop(self):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "stop")

    # -- turning -----------------------------------------------------------

    def turn(self, angle_deg: float):
        self.state.heading_deg = normalize_deg(self.state.heading_deg + angle_deg)
        self.trajectory.append(self.state.cell, self.state.heading_deg, "turn")

    def turn_absolute(self, angle_deg: float):
        self.state.heading_deg = normalize_deg(angle_deg)
        self.trajectory.append(self.state.cell, self.state.heading_deg, "turn")

    def face(self, obj):
        record = self._resolve(obj)
        self.state.heading_deg = bearing_deg(self.state.cell, record.centroid)
        self.trajectory.append(self.state.cell, self.state.heading_deg, "turn")

    # -- side-relative moves ----------------------------------------------

    def _bbox_cells(self, record: MaskRecord):
        x, y, w, h = record.bbox
        return y, y + h - 1, x, x + w - 1  # row0, row1, col0, col1

    def _goto_near(self, target: tuple[int, int], record: MaskRecord):
        self._goto(self._approach(target))
        self.state.heading_deg = bearing_deg(self.state.cell, record.centroid)

    def _cardinal_move(self, obj, side: str):
        record = self._resolve(obj)
        r0, r1, c0, c1 = self._bbox_cells(record)
        k = self._clearance_cells
        rc = (r0 + r1) // 2
        cc = (c0 + c1) // 2
        target = {
            "north": (r0 - k, cc),
            "south": (r1 + k, cc),
            "east": (rc, c1 + k),
            "west": (rc, c0 - k),
        }[side]
        self._goto_near(target, record)

    def move_north(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_north")
        self._cardinal_move(obj, "north")

    def move_south(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_south")
        self._cardinal_move(obj, "south")

    def move_east(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_east")
        self._cardinal_move(obj, "east")

    def move_west(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_west")
        self._cardinal_move(obj, "west")

    def _lateral_move(self, obj, sign: float):
        """sign +1 = object's right side as seen from the agent's line of
        sight (90 deg clockwise from the bearing), -1 = left side."""
        record = self._resolve(obj)
        cr, cc = record.centroid
        bearing = bearing_deg(self.state.cell, (cr, cc))
        dr, dc = heading_vec(normalize_deg(bearing + 90.0 * sign))
        x, y, w, h = record.bbox
        half = abs(dr) * h / 2.0 + abs(dc) * w / 2.0
        offset = half + self._clearance_cells
        target = (int(round(cr + dr * offset)), int(round(cc + dc * offset)))
        self._goto_near(target, record)

    def move_to_left(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_to_left")
        self._lateral_move(obj, -1.0)

    def move_to_right(self, obj):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_to_right")
        self._lateral_move(obj, 1.0)

    def _rotate_object_to_side(self, obj, side_deg: float):
        record = self._resolve(obj)
        bearing = bearing_deg(self.state.cell, record.centroid)
        rel = normalize_deg(bearing - self.state.heading_deg)
        if abs(normalize_deg(rel - side_deg)) > SIDE_TOLERANCE_DEG:
            self.state.heading_deg = normalize_deg(bearing - side_deg)
        self.trajectory.append(self.state.cell, self.state.heading_deg, "turn")

    def with_object_on_left(self, obj):
        self._rotate_object_to_side(obj, -90.0)

    def with_object_on_right(self, obj):
        self._rotate_object_to_side(obj, 90.0)

    def move_in_between(self, obj_a, obj_b):
        self.trajectory.append(self.state.cell, self.state.heading_deg, "call:move_in_between")
        ra = self._resolve(obj_a)
        rb = self._resolve(obj_b)
        mid = (
            int(round((ra.centroid[0] + rb.centroid[0]) / 2.0)),
            int(round((ra.centroid[1] + rb.centroid[1]) / 2.0)),
        )
        self._goto(self._approach(mid))

    # -- queries -----------------------------------------------------------

    def get_obj_attributes(self, name: str, instance_idx: int = 0, color: str | None = None):
        if isinstance(color, str) and color.lower() == "none":
            color = None
        record = self._resolve(ObjAttr(name, instance_idx, color))
        return ResolvedObj(record.label, record.label_id, record.color, record)

    def _nearest_front(self, name: str) -> MaskRecord:
        candidates = []
        for r in self.imap.records:
            if not r.queryable or r.label != name:
                continue
            rel = normalize_deg(
                bearing_deg(self.state.cell, r.centroid) - self.state.heading_deg
            )
            if abs(rel) <= 90.0:
                candidates.append(r)
        if not candidates:
            raise LocalizationError(f"no {name!r} in front of the agent")
        candidates.sort(
            key=lambda r: (
                math.hypot(
                    r.centroid[0] - self.state.cell[0], r.centroid[1] - self.state.cell[1]
                ),
                r.label_id,
            )
        )
        return candidates[0]

    def get_nearest_obj_pos(self, name: str) -> tuple[int, int]:
        record = self._nearest_front(name)
        return self._approach(fine_position(record, self.imap))

    def object_contour(self, record: MaskRecord) -> list[float]:
        """Side lengths (meters) of the clearance-inflated bbox, starting
        from the side facing the agent, clockwise."""
        x, y, w, h = record.bbox
        width_m = w * self.cell_size + 2.0 * self.clearance_m
        height_m = h * self.cell_size + 2.0 * self.clearance_m
        sides = [width_m, height_m, width_m, height_m]  # N, E, S, W
        beta = bearing_deg(
            (int(round(record.centroid[0])), int(round(record.centroid[1]))), self.state.cell
        )
        if -45.0 < beta <= 45.0:
            start = 0  # agent north of object
        elif 45.0 < beta <= 135.0:
            start = 1
        elif beta > 135.0 or beta <= -135.0:
            start = 2
        else:
            start = 3
        return sides[start:] + sides[:start]

    def get_specified_obj_pos(self, obj) -> list[float]:
        """Contour turning-point distances used to orbit the object."""
        record = self._resolve(obj)
        contour = self.object_contour(record)
        self._contour = contour
        self._contour_step = 0
        return contour

    def get_nearest_obj_contour(self, name: str) -> list[float]:
        record = self._nearest_front(name)
        contour = self.object_contour(record)
        self._contour = contour
        self._contour_step = 0
        return contour

    def next_contour_side(self) -> float:
        """Cycles through the active contour's sides; used by programs that
        walk around an object one side at a time."""
        if self._contour is None:
            raise PlanningError("no active contour: call get_specified_obj_pos first")
        side = self._contour[self._contour_step % 4]
        self._contour_step += 1
        return side
