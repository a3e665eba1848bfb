"""Deterministic 2D driving world: ego kinematics, traffic agents, collisions.

The ego is a kinematic bicycle; throttle and brake map linearly to
acceleration, steering to front-wheel angle. Traffic follows simple scripted
behavior (lane following for vehicles, sidewalk walking for pedestrians,
with occasional abrupt road crossings triggered near the ego). Every step is
a pure function of (state, action): replaying a command sequence from the
same seed reproduces trajectories bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .conditions import ConditionProfile, get_profile
from .geometry import (
    Pose2D,
    nearest_point_on_polyline,
    obb_corners,
    obb_intersects_segments,
    obb_overlap,
    point_at_arc,
    tangent_at_arc,
    wrap_angle,
    world_to_frame,
)
from .townmap import TownMap

DT = 0.1  # simulator tick, seconds

EGO_HALF_EXTENTS = (2.4, 1.0)  # 4.8 m x 2.0 m footprint


class InputDomainError(ValueError):
    """An action or parameter outside its declared domain."""


class ScenarioCapacityError(RuntimeError):
    """The map cannot host the requested number of agents without overlap."""


@dataclass(frozen=True)
class ActionTriple:
    """Normalized control command: steer [-1,1], throttle [0,1], brake [0,1]."""

    steer: float
    throttle: float
    brake: float

    def validate(self) -> "ActionTriple":
        vals = (self.steer, self.throttle, self.brake)
        if not all(math.isfinite(v) for v in vals):
            raise InputDomainError(f"non-finite action {vals}")
        if not (-1.0 <= self.steer <= 1.0 and 0.0 <= self.throttle <= 1.0
                and 0.0 <= self.brake <= 1.0):
            raise InputDomainError(f"action out of range {vals}")
        return self

    def clamped(self) -> "ActionTriple":
        return ActionTriple(
            float(np.clip(self.steer, -1.0, 1.0)),
            float(np.clip(self.throttle, 0.0, 1.0)),
            float(np.clip(self.brake, 0.0, 1.0)),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.steer, self.throttle, self.brake])


@dataclass(frozen=True)
class VehicleParams:
    """Kinematic bicycle parameters for the ego platform."""

    wheelbase: float = 2.7
    a_max: float = 3.0  # m/s^2 at full throttle
    b_max: float = 8.0  # m/s^2 at full brake
    max_steer_angle: float = math.radians(35.0)
    drag: float = 0.0  # linear speed damping, 1/s


DEFAULT_VEHICLE = VehicleParams()


@dataclass(frozen=True)
class EgoState:
    pose: Pose2D
    vx: float = 0.0  # body-longitudinal speed, >= 0
    vy: float = 0.0  # body-lateral speed
    yaw_rate: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


class AgentKind(enum.Enum):
    PEDESTRIAN = "pedestrian"
    CAR = "car"
    TRUCK = "truck"
    VAN = "van"
    BUS = "bus"
    MOTORCYCLIST = "motorcyclist"
    BICYCLIST = "bicyclist"


class Behavior(enum.Enum):
    LANE_FOLLOW = "lane_follow"
    SIDEWALK_WALK = "sidewalk_walk"
    JAYWALK = "jaywalk"


# half extents (hx along heading, hy lateral) and box height per kind
KIND_EXTENTS = {
    AgentKind.CAR: (2.2, 0.95),
    AgentKind.TRUCK: (4.0, 1.25),
    AgentKind.VAN: (2.7, 1.05),
    AgentKind.BUS: (5.5, 1.25),
    AgentKind.MOTORCYCLIST: (1.1, 0.45),
    AgentKind.BICYCLIST: (0.9, 0.40),
    AgentKind.PEDESTRIAN: (0.30, 0.30),
}
KIND_HEIGHTS = {
    AgentKind.CAR: 1.5,
    AgentKind.TRUCK: 3.2,
    AgentKind.VAN: 2.2,
    AgentKind.BUS: 3.0,
    AgentKind.MOTORCYCLIST: 1.5,
    AgentKind.BICYCLIST: 1.6,
    AgentKind.PEDESTRIAN: 1.7,
}
VEHICLE_KINDS = (
    AgentKind.CAR, AgentKind.TRUCK, AgentKind.VAN, AgentKind.BUS,
    AgentKind.MOTORCYCLIST, AgentKind.BICYCLIST,
)
VEHICLE_KIND_WEIGHTS = (0.45, 0.10, 0.15, 0.05, 0.12, 0.13)

JAYWALK_RATE = 0.01  # expected triggers per tick while the ego is near
JAYWALK_TRIGGER_RADIUS = 25.0


@dataclass
class Agent:
    id: int
    kind: AgentKind
    pose: Pose2D
    speed: float
    half_extents: tuple[float, float]
    behavior: Behavior
    # routing state (artifact plumbing, not part of the observable contract)
    lane_id: int | None = None
    lane_s: float = 0.0
    walk_id: int | None = None
    walk_s: float = 0.0
    walk_dir: int = 1
    cross_target: np.ndarray | None = None

    def box(self) -> tuple[float, float, float, float, float]:
        return (self.pose.x, self.pose.y, self.pose.yaw, *self.half_extents)


@dataclass(frozen=True)
class WorldState:
    tick: int
    ego: EgoState
    agents: tuple[Agent, ...]
    condition: ConditionProfile
    seed: int
    town: TownMap = field(repr=False)

    @property
    def time(self) -> float:
        return self.tick * DT


def _copy_agent(a: Agent) -> Agent:
    target = None if a.cross_target is None else a.cross_target.copy()
    return replace(a, cross_target=target)


def step_world(state: WorldState, action: ActionTriple, dt: float = DT,
               vehicle: VehicleParams = DEFAULT_VEHICLE) -> WorldState:
    """Advance the world one tick. Pure: the input state is never mutated."""
    action.validate()
    ego = _step_ego(state.ego, action, dt, vehicle)
    rng = np.random.default_rng([state.seed, state.tick, 101])
    agents = tuple(
        _step_agent(_copy_agent(a), state, ego, dt, rng) for a in state.agents
    )
    return replace(state, tick=state.tick + 1, ego=ego, agents=agents)


def _step_ego(ego: EgoState, action: ActionTriple, dt: float,
              veh: VehicleParams) -> EgoState:
    v = ego.speed
    accel = veh.a_max * action.throttle - veh.b_max * action.brake - veh.drag * v
    v_new = max(0.0, v + accel * dt)
    delta = veh.max_steer_angle * action.steer
    lr = veh.wheelbase / 2
    beta = math.atan(math.tan(delta) * lr / veh.wheelbase)
    yaw_rate = v_new * math.cos(beta) * math.tan(delta) / veh.wheelbase
    heading = ego.pose.yaw + beta
    x = ego.pose.x + v_new * math.cos(heading) * dt
    y = ego.pose.y + v_new * math.sin(heading) * dt
    yaw = wrap_angle(ego.pose.yaw + yaw_rate * dt)
    return EgoState(
        pose=Pose2D(x, y, yaw),
        vx=v_new * math.cos(beta),
        vy=v_new * math.sin(beta),
        yaw_rate=yaw_rate,
    )


def _blocked_ahead(agent: Agent, state: WorldState, ego: EgoState) -> bool:
    """True when another body sits in the agent's forward cone."""
    others = [(ego.pose.x, ego.pose.y)]
    others += [(o.pose.x, o.pose.y) for o in state.agents if o.id != agent.id]
    rel = world_to_frame(np.array(others), agent.pose)
    ahead = (rel[:, 0] > 0.0) & (rel[:, 0] < 7.0 + agent.half_extents[0]) \
        & (np.abs(rel[:, 1]) < 1.6)
    return bool(ahead.any())


def _step_agent(agent: Agent, state: WorldState, ego: EgoState, dt: float,
                rng: np.random.Generator) -> Agent:
    town = state.town
    if agent.behavior is Behavior.LANE_FOLLOW:
        if _blocked_ahead(agent, state, ego):
            return agent
        lane = town.lanes[agent.lane_id]
        s = agent.lane_s + agent.speed * dt
        while s > lane.length:
            choices = town.adjacency[lane.dst]
            s -= lane.length
            _, _, next_id = choices[int(rng.integers(len(choices)))]
            lane = town.lanes[next_id]
        p = point_at_arc(lane.centerline, lane.cum, s)
        yaw = tangent_at_arc(lane.centerline, lane.cum, s)
        agent.lane_id, agent.lane_s = lane.id, s
        agent.pose = Pose2D(p[0], p[1], yaw)
        return agent

    if agent.behavior is Behavior.SIDEWALK_WALK:
        ego_dist = math.hypot(ego.pose.x - agent.pose.x, ego.pose.y - agent.pose.y)
        if ego_dist <= JAYWALK_TRIGGER_RADIUS \
                and rng.random() < 1.0 - math.exp(-JAYWALK_RATE):
            return _begin_crossing(agent, town)
        walk = town.sidewalks[agent.walk_id]
        cum = town.walk_cum(agent.walk_id)
        s = agent.walk_s + agent.walk_dir * agent.speed * dt
        if s < 0.0 or s > cum[-1]:
            agent.walk_dir = -agent.walk_dir
            s = min(max(s, 0.0), cum[-1])
        p = point_at_arc(walk, cum, s)
        yaw = tangent_at_arc(walk, cum, s)
        if agent.walk_dir < 0:
            yaw = wrap_angle(yaw + math.pi)
        agent.walk_s = s
        agent.pose = Pose2D(p[0], p[1], yaw)
        return agent

    # jaywalk: march straight at the crossing target, then rejoin a sidewalk
    target = agent.cross_target
    d = target - agent.pose.xy
    dist = float(np.hypot(*d))
    step = agent.speed * dt
    if dist <= step + 0.05:
        agent.behavior = Behavior.SIDEWALK_WALK
        agent.cross_target = None
        agent.walk_id, agent.walk_s = _nearest_sidewalk(town, target)
        agent.walk_dir = 1 if rng.random() < 0.5 else -1
        agent.pose = Pose2D(target[0], target[1], agent.pose.yaw)
        return agent
    yaw = math.atan2(d[1], d[0])
    p = agent.pose.xy + d / dist * step
    agent.pose = Pose2D(p[0], p[1], yaw)
    return agent


def _nearest_sidewalk(town: TownMap, p) -> tuple[int, float]:
    best = (0, 0.0, math.inf)
    for i, walk in enumerate(town.sidewalks):
        s, d, _ = nearest_point_on_polyline(walk, p)
        if d < best[2]:
            best = (i, s, d)
    return best[0], best[1]


def _begin_crossing(agent: Agent, town: TownMap) -> Agent:
    """Aim the pedestrian straight across the nearest lane."""
    best = None
    for lane in town.lanes:
        _, d, foot = nearest_point_on_polyline(lane.centerline, agent.pose.xy)
        if best is None or d < best[0]:
            best = (d, foot, lane.width)
    d, foot, width = best
    direction = foot - agent.pose.xy
    norm = float(np.hypot(*direction))
    if norm < 1e-9:
        direction, norm = np.array([1.0, 0.0]), 1.0
    direction = direction / norm
    agent.behavior = Behavior.JAYWALK
    agent.cross_target = agent.pose.xy + direction * (norm + 1.5 * width + 1.0)
    agent.speed = agent.speed * 1.6 + 0.4  # hurried crossing
    return agent


# ---------------------------------------------------------------------------
# Collision checking


def ego_box(ego: EgoState) -> tuple[float, float, float, float, float]:
    return (ego.pose.x, ego.pose.y, ego.pose.yaw, *EGO_HALF_EXTENTS)


def check_collision(state: WorldState) -> list:
    """Ids of all agents and road-edge walls overlapping the ego box."""
    box = ego_box(state.ego)
    hits: list = [a.id for a in state.agents if obb_overlap(box, a.box())]
    wall_p, wall_q = state.town.walls()
    corners = obb_corners(*box)
    # cheap reject: walls outside the box circumradius cannot touch
    radius = math.hypot(*EGO_HALF_EXTENTS) + 1e-6
    center = np.array([state.ego.pose.x, state.ego.pose.y])
    mid = (wall_p + wall_q) / 2
    seg_half = np.hypot(*(wall_q - wall_p).T) / 2
    near = np.hypot(*(mid - center).T) <= radius + seg_half
    idx = np.where(near)[0]
    if idx.size:
        touching = obb_intersects_segments(box, wall_p[idx], wall_q[idx])
        hits.extend(f"wall_{int(idx[t])}" for t in touching)
    return hits


# ---------------------------------------------------------------------------
# Scenario spawning

DENSITY_TABLE = {
    "empty": ((0, 0), (0, 0)),
    "regular": ((40, 75), (60, 60)),
    "dense": ((60, 150), (80, 120)),
}


def spawn_scenario(town: TownMap, density: str, scale: float, seed: int,
                   ego_start: Pose2D | None = None,
                   condition: ConditionProfile | str = "ClearDay") -> WorldState:
    """Populate a world with agent counts drawn from the density table.

    Counts are the table ranges scaled by `scale` (rounded); placement avoids
    initial overlap among agents, the ego, and keeps pedestrians on sidewalks.
    Deterministic for a fixed (town, density, scale, seed).
    """
    if not 0.0 < scale <= 1.0:
        raise InputDomainError(f"scale {scale} outside (0, 1]")
    if density not in DENSITY_TABLE:
        raise InputDomainError(f"unknown density {density!r}")
    if isinstance(condition, str):
        condition = get_profile(condition)
    rng = np.random.default_rng([seed, 7])
    (ped_lo, ped_hi), (veh_lo, veh_hi) = DENSITY_TABLE[density]
    n_ped = int(rng.integers(round(ped_lo * scale), round(ped_hi * scale) + 1))
    n_veh = int(rng.integers(round(veh_lo * scale), round(veh_hi * scale) + 1))

    if ego_start is None:
        ego_start = town.spawn_points[int(rng.integers(len(town.spawn_points)))]
    ego = EgoState(pose=ego_start)

    agents: list[Agent] = []
    boxes = [ego_box(ego)]

    def try_place(make):
        for _ in range(400):
            agent = make()
            grown = (agent.pose.x, agent.pose.y, agent.pose.yaw,
                     agent.half_extents[0] + 0.6, agent.half_extents[1] + 0.6)
            if not any(obb_overlap(grown, b) for b in boxes):
                boxes.append(agent.box())
                agents.append(agent)
                return
        raise ScenarioCapacityError(
            f"could not place agent {len(agents)} of {n_ped + n_veh} on {town.name}"
        )

    for i in range(n_veh):
        def make_vehicle(i=i):
            lane = town.lanes[int(rng.integers(len(town.lanes)))]
            kind = VEHICLE_KINDS[int(rng.choice(len(VEHICLE_KINDS), p=VEHICLE_KIND_WEIGHTS))]
            hx, hy = KIND_EXTENTS[kind]
            lo, hi = hx + 0.5, lane.length - hx - 0.5
            if lo >= hi:
                lo = hi = lane.length / 2
            s = float(rng.uniform(lo, hi))
            p = point_at_arc(lane.centerline, lane.cum, s)
            yaw = tangent_at_arc(lane.centerline, lane.cum, s)
            return Agent(
                id=len(agents), kind=kind, pose=Pose2D(p[0], p[1], yaw),
                speed=float(rng.uniform(3.0, 8.0)), half_extents=(hx, hy),
                behavior=Behavior.LANE_FOLLOW, lane_id=lane.id, lane_s=s,
            )
        try_place(make_vehicle)

    for i in range(n_ped):
        def make_ped(i=i):
            wid = int(rng.integers(len(town.sidewalks)))
            walk = town.sidewalks[wid]
            cum = town.walk_cum(wid)
            s = float(rng.uniform(0.0, cum[-1]))
            p = point_at_arc(walk, cum, s)
            yaw = tangent_at_arc(walk, cum, s)
            size = float(rng.uniform(0.7, 1.2))  # children through adults
            hx, hy = KIND_EXTENTS[AgentKind.PEDESTRIAN]
            direction = 1 if rng.random() < 0.5 else -1
            return Agent(
                id=len(agents), kind=AgentKind.PEDESTRIAN,
                pose=Pose2D(p[0], p[1], yaw if direction > 0 else wrap_angle(yaw + math.pi)),
                speed=float(rng.uniform(0.8, 2.0)),
                half_extents=(hx * size, hy * size),
                behavior=Behavior.SIDEWALK_WALK, walk_id=wid, walk_s=s,
                walk_dir=direction,
            )
        try_place(make_ped)

    state = WorldState(
        tick=0, ego=ego, agents=tuple(agents), condition=condition,
        seed=int(seed), town=town,
    )
    minx, miny, maxx, maxy = town.bounds()
    if not (minx <= ego.pose.x <= maxx and miny <= ego.pose.y <= maxy):
        raise InputDomainError("ego spawn outside map bounds")
    return state
