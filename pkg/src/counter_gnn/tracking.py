"""Core domain types and ingestion for tracking/event streams.

Coordinate convention: origin at a pitch corner, x along the long side,
home attacks toward x = length in period 1.  All positions are snapped to
a 1/65536 m grid at ingestion so that the mirror map (x -> length - x)
is exact in double precision.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Literal

from .errors import DataError, ParseError, SchemaError

Team = Literal["home", "away"]
AttackingTeam = Literal["home", "away", "none"]
Gender = Literal["women", "men"]

FRAME_DT = 0.1  # 10 Hz tracking
PLAYER_MAX_SPEED = 13.0  # m/s, ingestion clamp
BALL_MAX_SPEED = 40.0  # m/s, ingestion clamp
POSITION_MARGIN = 5.0  # m outside pitch bounds still accepted
SYNC_MAX_GAP = 1.0  # s, events farther than this from any frame are dropped

_GRID = 65536.0

EVENT_KINDS = (
    "pass",
    "reception",
    "carry",
    "interception",
    "tackle",
    "recovery",
    "clearance",
    "shot",
    "foul",
    "out_of_play",
    "other",
)


def snap(value: float) -> float:
    """Snap a coordinate to the dyadic ingestion grid (1/65536 m)."""
    return round(value * _GRID) / _GRID


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise SchemaError("position", "coordinates must be finite")

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class PitchSpec:
    """Pitch geometry.  Penalty areas use the standard 16.5 m x 40.32 m box."""

    length: float = 105.0
    width: float = 68.0
    penalty_depth: float = 16.5
    penalty_width: float = 40.32

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise SchemaError("pitch", "length and width must be positive")
        if self.penalty_depth > self.length or self.penalty_width > self.width:
            raise SchemaError("pitch", "penalty area must lie inside pitch bounds")

    @property
    def goal_center_home(self) -> Vec2:
        """Goal the home team defends (x = 0)."""
        return Vec2(0.0, self.width / 2.0)

    @property
    def goal_center_away(self) -> Vec2:
        return Vec2(self.length, self.width / 2.0)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.length, self.width)

    def in_attacking_box(self, x: float, y: float) -> bool:
        """True if (x, y), expressed in attacking orientation (+x), lies in
        the opponent's penalty area."""
        half = self.penalty_width / 2.0
        return (
            x >= self.length - self.penalty_depth
            and abs(y - self.width / 2.0) <= half
        )


@dataclass(frozen=True)
class PlayerState:
    player_id: str
    team: Team
    position: Vec2
    velocity: Vec2
    extrapolated: bool = False


@dataclass(frozen=True)
class BallState:
    position: Vec2
    velocity: Vec2


@dataclass(frozen=True)
class Frame:
    frame_id: int
    timestamp: float
    period: int
    players: tuple[PlayerState, ...]
    ball: BallState
    attacking_team: AttackingTeam = "none"


@dataclass(frozen=True)
class EventRecord:
    event_id: int
    timestamp: float
    team: Team
    player_id: str
    kind: str
    location: Vec2
    outcome: str  # success | failure | neutral
    frame_id: int | None = None  # filled by synchronize()


@dataclass(frozen=True)
class SyncedMatch:
    match_id: str
    gender: Gender
    frames: tuple[Frame, ...]
    events: tuple[EventRecord, ...]
    pitch: PitchSpec
    dropped_events: int = 0


@dataclass
class IngestStats:
    """Counters the loaders may fill in (optional out-parameter)."""

    unknown_kinds: int = 0
    clamped_speeds: int = 0


def attacks_positive_x(team: Team, period: int) -> bool:
    """Home attacks +x in period 1; sides swap in period 2."""
    return (team == "home") == (period == 1)


def _clamp_velocity(v: Vec2, max_speed: float, stats: IngestStats | None) -> Vec2:
    speed = v.norm()
    if speed <= max_speed:
        return v
    if stats is not None:
        stats.clamped_speeds += 1
    scale = max_speed / speed
    return Vec2(v.x * scale, v.y * scale)


def _check_position(x: float, y: float, pitch: PitchSpec, line_no: int) -> None:
    if not (
        -POSITION_MARGIN <= x <= pitch.length + POSITION_MARGIN
        and -POSITION_MARGIN <= y <= pitch.width + POSITION_MARGIN
    ):
        raise SchemaError(
            "position",
            f"({x}, {y}) outside pitch bounds "
            f"[{-POSITION_MARGIN}, {pitch.length + POSITION_MARGIN}] x "
            f"[{-POSITION_MARGIN}, {pitch.width + POSITION_MARGIN}]",
            line_no,
        )


def _require(obj: dict, key: str, line_no: int):
    if key not in obj:
        raise SchemaError(key, "missing required field", line_no)
    return obj[key]


def load_tracking(
    path: str | Path,
    pitch: PitchSpec | None = None,
    stats: IngestStats | None = None,
) -> list[Frame]:
    """Read a tracking JSONL file into a sorted list of frames.

    Velocities are taken from the file when every entity carries vx/vy;
    otherwise they are derived by backward difference (derive_velocities).
    """
    pitch = pitch or PitchSpec()
    if not Path(path).exists():
        raise DataError(f"tracking file not found: {path}")
    frames: list[Frame] = []
    any_missing_velocity = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), line_no, exc.msg) from exc
            frame_id = _require(obj, "frame_id", line_no)
            timestamp = float(_require(obj, "timestamp", line_no))
            period = int(_require(obj, "period", line_no))
            if period not in (1, 2):
                raise SchemaError("period", f"must be 1 or 2, got {period}", line_no)
            ball_obj = _require(obj, "ball", line_no)
            bx, by = float(ball_obj["x"]), float(ball_obj["y"])
            _check_position(bx, by, pitch, line_no)
            has_v = "vx" in ball_obj and "vy" in ball_obj
            any_missing_velocity |= not has_v
            ball = BallState(
                position=Vec2(snap(bx), snap(by)),
                velocity=_clamp_velocity(
                    Vec2(float(ball_obj.get("vx", 0.0)), float(ball_obj.get("vy", 0.0))),
                    BALL_MAX_SPEED,
                    stats,
                ),
            )
            players = []
            seen_ids: set[str] = set()
            for p in _require(obj, "players", line_no):
                pid = str(_require(p, "id", line_no))
                if pid in seen_ids:
                    raise SchemaError("players", f"duplicate player id {pid!r}", line_no)
                seen_ids.add(pid)
                team = _require(p, "team", line_no)
                if team not in ("home", "away"):
                    raise SchemaError("team", f"must be home or away, got {team!r}", line_no)
                px, py = float(_require(p, "x", line_no)), float(_require(p, "y", line_no))
                _check_position(px, py, pitch, line_no)
                has_v = "vx" in p and "vy" in p
                any_missing_velocity |= not has_v
                players.append(
                    PlayerState(
                        player_id=pid,
                        team=team,
                        position=Vec2(snap(px), snap(py)),
                        velocity=_clamp_velocity(
                            Vec2(float(p.get("vx", 0.0)), float(p.get("vy", 0.0))),
                            PLAYER_MAX_SPEED,
                            stats,
                        ),
                        extrapolated=bool(p.get("extrapolated", False)),
                    )
                )
            if not 0 < len(players) <= 22:
                raise SchemaError("players", f"need 1..22 players, got {len(players)}", line_no)
            frames.append(
                Frame(
                    frame_id=int(frame_id),
                    timestamp=timestamp,
                    period=period,
                    players=tuple(players),
                    ball=ball,
                    attacking_team=obj.get("attacking_team", "none"),
                )
            )
    frames.sort(key=lambda f: f.frame_id)
    for a, b in zip(frames, frames[1:]):
        if a.frame_id == b.frame_id:
            raise SchemaError("frame_id", f"duplicate frame_id {a.frame_id}")
    if any_missing_velocity and frames:
        frames = derive_velocities(frames)
    return frames


def derive_velocities(frames: list[Frame], dt: float = FRAME_DT) -> list[Frame]:
    """Backward-difference velocities: v[k] = (pos[k] - pos[k-1]) / dt.

    Frame 0 copies frame 1's velocities (zero for a single frame); an
    entity absent from the previous frame gets zero velocity.  Speeds are
    clamped to the ingestion bounds.
    """
    if dt <= 0:
        raise DataError("dt must be positive")
    if not frames:
        return []

    out: list[Frame] = []
    for k, frame in enumerate(frames):
        prev = frames[k - 1] if k > 0 else None
        prev_pos = (
            {p.player_id: p.position for p in prev.players} if prev is not None else {}
        )
        players = []
        for p in frame.players:
            if prev is not None and p.player_id in prev_pos:
                q = prev_pos[p.player_id]
                v = Vec2((p.position.x - q.x) / dt, (p.position.y - q.y) / dt)
            else:
                v = Vec2(0.0, 0.0)
            players.append(replace(p, velocity=_clamp_velocity(v, PLAYER_MAX_SPEED, None)))
        if prev is not None:
            bq = prev.ball.position
            bv = Vec2(
                (frame.ball.position.x - bq.x) / dt,
                (frame.ball.position.y - bq.y) / dt,
            )
        else:
            bv = Vec2(0.0, 0.0)
        ball = BallState(frame.ball.position, _clamp_velocity(bv, BALL_MAX_SPEED, None))
        out.append(replace(frame, players=tuple(players), ball=ball))

    if len(out) >= 2:
        # frame 0 copies frame 1's velocities, matched by entity id
        first, second = out[0], out[1]
        v_by_id = {p.player_id: p.velocity for p in second.players}
        players = tuple(
            replace(p, velocity=v_by_id.get(p.player_id, Vec2(0.0, 0.0)))
            for p in first.players
        )
        out[0] = replace(
            first,
            players=players,
            ball=BallState(first.ball.position, second.ball.velocity),
        )
    return out


def load_events(path: str | Path, stats: IngestStats | None = None) -> list[EventRecord]:
    """Read an event JSONL file, sorted by (timestamp, event_id).

    Unknown kind strings map to 'other' (counted in stats) so new provider
    vocabularies degrade gracefully.
    """
    if not Path(path).exists():
        raise DataError(f"event file not found: {path}")
    events: list[EventRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), line_no, exc.msg) from exc
            kind = str(_require(obj, "kind", line_no))
            if kind not in EVENT_KINDS:
                kind = "other"
                if stats is not None:
                    stats.unknown_kinds += 1
            team = _require(obj, "team", line_no)
            if team not in ("home", "away"):
                raise SchemaError("team", f"must be home or away, got {team!r}", line_no)
            outcome = obj.get("outcome", "neutral")
            if outcome not in ("success", "failure", "neutral"):
                raise SchemaError("outcome", f"unknown outcome {outcome!r}", line_no)
            events.append(
                EventRecord(
                    event_id=int(_require(obj, "event_id", line_no)),
                    timestamp=float(_require(obj, "timestamp", line_no)),
                    team=team,
                    player_id=str(_require(obj, "player_id", line_no)),
                    kind=kind,
                    location=Vec2(float(_require(obj, "x", line_no)), float(_require(obj, "y", line_no))),
                    outcome=outcome,
                )
            )
    events.sort(key=lambda e: (e.timestamp, e.event_id))
    return events


def synchronize(
    frames: list[Frame],
    events: list[EventRecord],
    gender: Gender,
    pitch: PitchSpec | None = None,
    match_id: str = "match",
) -> SyncedMatch:
    """Annotate each event with its nearest frame_id by timestamp.

    Ties go to the earlier frame; events farther than SYNC_MAX_GAP from
    any frame are dropped and counted.
    """
    pitch = pitch or PitchSpec()
    if not frames and events:
        raise DataError("cannot synchronize events against an empty frame list")
    ordered = sorted(frames, key=lambda f: f.timestamp)
    timestamps = [f.timestamp for f in ordered]
    kept: list[EventRecord] = []
    dropped = 0
    for ev in events:
        i = bisect.bisect_left(timestamps, ev.timestamp)
        best = None
        best_gap = math.inf
        # candidates around the insertion point; earlier frame wins ties
        for j in (i - 1, i):
            if 0 <= j < len(ordered):
                gap = abs(timestamps[j] - ev.timestamp)
                if gap < best_gap:
                    best_gap = gap
                    best = ordered[j]
        if best is None or best_gap > SYNC_MAX_GAP:
            dropped += 1
            continue
        kept.append(replace(ev, frame_id=best.frame_id))
    return SyncedMatch(
        match_id=match_id,
        gender=gender,
        frames=tuple(frames),
        events=tuple(kept),
        pitch=pitch,
        dropped_events=dropped,
    )


def write_tracking(frames: Iterable[Frame], path: str | Path) -> None:
    """Serialize frames to the tracking JSONL format (round-trip exact)."""
    with open(path, "w", encoding="utf-8") as fh:
        for f in frames:
            obj = {
                "frame_id": f.frame_id,
                "timestamp": f.timestamp,
                "period": f.period,
                "ball": {
                    "x": f.ball.position.x,
                    "y": f.ball.position.y,
                    "vx": f.ball.velocity.x,
                    "vy": f.ball.velocity.y,
                },
                "players": [
                    {
                        "id": p.player_id,
                        "team": p.team,
                        "x": p.position.x,
                        "y": p.position.y,
                        "vx": p.velocity.x,
                        "vy": p.velocity.y,
                        "extrapolated": p.extrapolated,
                    }
                    for p in f.players
                ],
            }
            if f.attacking_team != "none":
                obj["attacking_team"] = f.attacking_team
            fh.write(json.dumps(obj) + "\n")


def write_events(events: Iterable[EventRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(
                json.dumps(
                    {
                        "event_id": e.event_id,
                        "timestamp": e.timestamp,
                        "team": e.team,
                        "player_id": e.player_id,
                        "kind": e.kind,
                        "x": e.location.x,
                        "y": e.location.y,
                        "outcome": e.outcome,
                    }
                )
                + "\n"
            )
