"""Rule-based counterattack detection and frame labeling.

Detection scans the event stream for possession regains deep in a team's
own territory, follows the possession until it is lost, goes dead, ends in
a shot, or reaches the opponent's penalty area under control, then keeps
the candidate only if the ball progressed far enough quickly enough with
few completed passes.  A sequence is successful when it ends with the
attacking team controlling the ball inside the opponent's box (a carry in
the box, or a successful reception in the box).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

from .errors import DataError
from .tracking import (
    BallState,
    EventRecord,
    Frame,
    Gender,
    PitchSpec,
    PlayerState,
    SyncedMatch,
    Team,
    Vec2,
    attacks_positive_x,
)

REGAIN_KINDS = frozenset({"interception", "tackle", "recovery"})

Label = Literal["success", "failure"]


@dataclass(frozen=True)
class DetectorConfig:
    regain_zone_max_x: float = 0.6  # fraction of pitch length
    max_completed_passes: int = 4
    max_duration: float = 15.0  # seconds
    min_forward_progress: float = 25.0  # meters toward opponent goal
    progress_window: float = 10.0  # seconds

    def __post_init__(self):
        if not 0.0 < self.regain_zone_max_x <= 1.0:
            raise DataError("regain_zone_max_x must be in (0, 1]")
        for name in ("max_completed_passes", "max_duration", "min_forward_progress", "progress_window"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class CounterattackSequence:
    match_id: str
    team: Team
    start_event_id: int
    end_event_id: int
    start_ts: float
    end_ts: float
    label: Label
    frame_ids: tuple[int, ...]


@dataclass(frozen=True)
class LabeledFrame:
    """A frame inside a counterattack, mirrored so the attack runs +x."""

    frame: Frame
    label: int  # 1 = successful counterattack
    sequence_ref: int  # start_event_id of the owning sequence
    gender: Gender


def oriented_x(event: EventRecord, pitch: PitchSpec, period: int = 1) -> float:
    """Event x in the acting team's attacking orientation."""
    if attacks_positive_x(event.team, period):
        return event.location.x
    return pitch.length - event.location.x


def oriented_y(event: EventRecord, pitch: PitchSpec, period: int = 1) -> float:
    if attacks_positive_x(event.team, period):
        return event.location.y
    return pitch.width - event.location.y


def _is_box_control(ev: EventRecord, pitch: PitchSpec, period: int) -> bool:
    """Carry in the opponent box, or successful reception in the box."""
    if ev.kind not in ("carry", "reception"):
        return False
    if ev.kind == "reception" and ev.outcome != "success":
        return False
    return pitch.in_attacking_box(oriented_x(ev, pitch, period), oriented_y(ev, pitch, period))


def _event_period(match: SyncedMatch, ev: EventRecord) -> int:
    if ev.frame_id is not None:
        for f in match.frames:
            if f.frame_id == ev.frame_id:
                return f.period
    return 1


@dataclass
class _Candidate:
    team: Team
    period: int
    start: EventRecord
    events: list[EventRecord]  # own-team events from start to natural end
    terminal: EventRecord | None = None  # event that naturally closed it
    terminal_reason: str = "open"  # possession_loss | out_of_play | shot | box | open


def detect_counterattacks(
    match: SyncedMatch, config: DetectorConfig | None = None
) -> list[CounterattackSequence]:
    """Identify non-overlapping counterattack sequences in a match.

    Two passes: first the event stream is segmented into possession
    candidates (one per regain, at most one per possession stretch),
    then each candidate is truncated to max_duration, filtered on forward
    progress and completed passes, and labeled.
    """
    config = config or DetectorConfig()
    pitch = match.pitch
    periods = {f.frame_id: f.period for f in match.frames}

    def period_of(ev: EventRecord) -> int:
        return periods.get(ev.frame_id, 1) if ev.frame_id is not None else 1

    # pass 1: candidates with their natural ends, ignoring max_duration
    candidates: list[_Candidate] = []
    active: _Candidate | None = None
    possession: Team | None = None
    for ev in match.events:
        if active is not None:
            if ev.team != active.team:
                if ev.kind != "foul":
                    active.terminal = ev
                    active.terminal_reason = "possession_loss"
                    active = None
                    # fall through: this event may start the opponent's candidate
                else:
                    continue
            else:
                active.events.append(ev)
                if ev.kind == "out_of_play":
                    active.terminal = ev
                    active.terminal_reason = "out_of_play"
                    active = None
                elif ev.kind == "shot":
                    active.terminal = ev
                    active.terminal_reason = "shot"
                    active = None
                elif _is_box_control(ev, pitch, active.period):
                    active.terminal = ev
                    active.terminal_reason = "box"
                    active = None
                if active is not None or ev.kind != "foul":
                    possession = ev.team
                continue
        if (
            active is None
            and ev.kind in REGAIN_KINDS
            and possession != ev.team
        ):
            p = period_of(ev)
            if oriented_x(ev, pitch, p) <= config.regain_zone_max_x * pitch.length:
                active = _Candidate(team=ev.team, period=p, start=ev, events=[ev])
                candidates.append(active)
        if ev.kind != "foul":
            possession = ev.team

    # pass 2: truncate, filter, label
    sequences: list[CounterattackSequence] = []
    prev_end = -float("inf")
    for cand in candidates:
        start_ts = cand.start.timestamp
        horizon = start_ts + config.max_duration
        natural_end = cand.events[-1]
        within = [e for e in cand.events if e.timestamp <= horizon]
        if not within:
            continue
        end_ev = within[-1]
        end_ts = end_ev.timestamp
        timed_out = natural_end.timestamp > horizon

        # filters are measured on the progress window so they do not
        # depend on max_duration (keeps detection monotone in duration)
        window = [e for e in cand.events if e.timestamp <= start_ts + config.progress_window]
        x0 = oriented_x(cand.start, pitch, cand.period)
        progress = max(oriented_x(e, pitch, cand.period) - x0 for e in window)
        passes = sum(1 for e in window if e.kind == "pass" and e.outcome == "success")
        if progress < config.min_forward_progress:
            continue
        if passes > config.max_completed_passes:
            continue

        label: Label = (
            "success" if cand.terminal_reason == "box" and not timed_out else "failure"
        )
        if start_ts <= prev_end:  # never overlap; earlier start wins
            continue
        frame_ids = tuple(
            f.frame_id for f in match.frames if start_ts <= f.timestamp <= end_ts
        )
        if not frame_ids:
            continue
        sequences.append(
            CounterattackSequence(
                match_id=match.match_id,
                team=cand.team,
                start_event_id=cand.start.event_id,
                end_event_id=end_ev.event_id,
                start_ts=start_ts,
                end_ts=end_ts,
                label=label,
                frame_ids=frame_ids,
            )
        )
        prev_end = end_ts
    return sequences


def mirror_frame(frame: Frame, pitch: PitchSpec) -> Frame:
    """Rotate a frame 180 degrees: x -> L - x, y -> W - y, velocities negated.

    Exact involution for grid-snapped coordinates.
    """
    def flip_player(p: PlayerState) -> PlayerState:
        return replace(
            p,
            position=Vec2(pitch.length - p.position.x, pitch.width - p.position.y),
            velocity=Vec2(-p.velocity.x, -p.velocity.y),
        )

    return replace(
        frame,
        players=tuple(flip_player(p) for p in frame.players),
        ball=BallState(
            position=Vec2(
                pitch.length - frame.ball.position.x,
                pitch.width - frame.ball.position.y,
            ),
            velocity=Vec2(-frame.ball.velocity.x, -frame.ball.velocity.y),
        ),
    )


def label_frames(
    match: SyncedMatch, sequences: list[CounterattackSequence]
) -> list[LabeledFrame]:
    """Emit exactly the frames inside some sequence, canonicalized to +x.

    Each frame carries its sequence's binary label and is mirrored when the
    counterattacking team attacks -x, so every LabeledFrame attacks +x.
    """
    out: list[LabeledFrame] = []
    by_id = {f.frame_id: f for f in match.frames}
    for seq in sequences:
        for fid in seq.frame_ids:
            frame = by_id[fid]
            if not attacks_positive_x(seq.team, frame.period):
                frame = mirror_frame(frame, match.pitch)
            frame = replace(frame, attacking_team=seq.team)
            out.append(
                LabeledFrame(
                    frame=frame,
                    label=1 if seq.label == "success" else 0,
                    sequence_ref=seq.start_event_id,
                    gender=match.gender,
                )
            )
    return out


@dataclass(frozen=True)
class SummaryStats:
    n_sequences: int
    n_success: int
    success_rate: float
    shots_total: int
    shots_in_sequences: int
    shot_share: float


def summary_stats(
    sequences: list[CounterattackSequence], all_shot_events: list[EventRecord]
) -> SummaryStats:
    """Counts of sequences, success rate, and share of shots inside sequences."""
    n = len(sequences)
    n_success = sum(1 for s in sequences if s.label == "success")
    spans = [(s.start_ts, s.end_ts) for s in sequences]
    shots_total = len(all_shot_events)
    shots_in = sum(
        1
        for e in all_shot_events
        if any(a <= e.timestamp <= b for a, b in spans)
    )
    return SummaryStats(
        n_sequences=n,
        n_success=n_success,
        success_rate=n_success / n if n else 0.0,
        shots_total=shots_total,
        shots_in_sequences=shots_in,
        shot_share=shots_in / shots_total if shots_total else 0.0,
    )
