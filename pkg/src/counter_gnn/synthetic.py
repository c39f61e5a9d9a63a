"""Synthetic match generator with known ground truth.

Every sequence is scripted to conform to the detector's rules, and frame
kinematics carry a tunable learnable signal: in success-labeled sequences
the attacking players' velocity x-components (toward goal) are boosted and
the defenders are displaced away from the ball path.  At signal_strength 0
the frame features are statistically independent of the labels.

Event locations drive the detector; frame kinematics drive the model.  The
two are deliberately decoupled so that positional features cannot leak the
label through the event script.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detector import CounterattackSequence
from .errors import DataError
from .tracking import (
    BallState,
    EventRecord,
    Frame,
    FRAME_DT,
    Gender,
    PitchSpec,
    PlayerState,
    SyncedMatch,
    Vec2,
    attacks_positive_x,
    snap,
)


@dataclass(frozen=True)
class SynthConfig:
    n_sequences: int = 400
    frames_per_sequence: int = 10
    success_rate: float = 0.5
    signal_strength: float = 1.0
    gender: Gender = "women"
    # signal shape (scaled by signal_strength)
    attack_vx_boost: float = 3.0  # m/s added to attacker vx in success frames
    failure_vx_boost: float = 0.0  # m/s added in failure frames
    defender_shift: float = 3.0  # m defenders pushed off the ball path in success frames
    vx_noise: float = 1.5
    vy_noise: float = 2.5
    shot_failure_share: float = 0.3  # fraction of failures ending in a shot
    match_id: str = "synthetic"

    def __post_init__(self):
        if self.n_sequences < 0:
            raise DataError("n_sequences must be non-negative")
        if self.frames_per_sequence < 2:
            raise DataError("frames_per_sequence must be at least 2")
        if not 0.0 <= self.success_rate <= 1.0:
            raise DataError("success_rate must be in [0, 1]")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise DataError("signal_strength must be in [0, 1]")


@dataclass
class SynthOracle:
    """Ground-truth bookkeeping recorded while generating."""

    sequences: list[CounterattackSequence] = field(default_factory=list)
    shots_total: int = 0
    shots_in_sequences: int = 0


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def generate_synthetic_match(
    config: SynthConfig, seed: int
) -> tuple[SyncedMatch, SynthOracle]:
    """Deterministically generate a match plus oracle sequence labels."""
    rng = np.random.default_rng(seed)
    pitch = PitchSpec()
    L, W = pitch.length, pitch.width
    n_frames_seq = config.frames_per_sequence
    span = (n_frames_seq - 1) * FRAME_DT
    gap = 2.0

    frames: list[Frame] = []
    events: list[EventRecord] = []
    oracle = SynthOracle()
    next_event_id = 1
    next_frame_id = 1
    t = 1.0

    def emit_event(ts, team, kind, x_or, y_or, outcome, period=1):
        nonlocal next_event_id
        if attacks_positive_x(team, period):
            x, y = x_or, y_or
        else:
            x, y = L - x_or, W - y_or
        ev = EventRecord(
            event_id=next_event_id,
            timestamp=round(ts, 3),
            team=team,
            player_id=f"{'H' if team == 'home' else 'A'}{int(rng.integers(1, 12))}",
            kind=kind,
            location=Vec2(snap(_clamp(x, 0, L)), snap(_clamp(y, 0, W))),
            outcome=outcome,
        )
        events.append(ev)
        next_event_id += 1
        return ev

    def emit_frame(ts, attacking, success, period=1):
        """One 22-player frame; kinematics drawn iid per frame."""
        nonlocal next_frame_id
        strength = config.signal_strength
        boost = strength * (
            config.attack_vx_boost if success else config.failure_vx_boost
        )
        ball_y = W / 2 + rng.normal(0, 4.0)
        ball_x_or = rng.uniform(30.0, 80.0)
        ball_vx_or = rng.normal(8.0, 3.0)
        att_dir_abs = 1.0 if attacks_positive_x(attacking, period) else -1.0
        players = []
        for team in ("home", "away"):
            is_attacking = team == attacking
            for i in range(1, 12):
                if is_attacking:
                    x_or = rng.uniform(20.0, 90.0)
                    y = rng.uniform(4.0, W - 4.0)
                    vx_or = rng.normal(1.0, config.vx_noise) + boost
                    vy = rng.normal(0.0, config.vy_noise)
                else:
                    x_or = _clamp(ball_x_or + rng.normal(8.0, 10.0), 2.0, L - 2.0)
                    y = ball_y + rng.normal(0.0, 8.0)
                    if success:
                        off = strength * config.defender_shift
                        y += off if y >= ball_y else -off
                    vx_or = rng.normal(0.0, config.vx_noise)
                    vy = rng.normal(0.0, config.vy_noise)
                y = _clamp(y, 0.0, W)
                # all geometry is drawn in the attacker's orientation
                x_abs = x_or if att_dir_abs > 0 else L - x_or
                y_abs = y if att_dir_abs > 0 else W - y
                v_abs = Vec2(att_dir_abs * vx_or, att_dir_abs * vy)
                speed = v_abs.norm()
                if speed > 13.0:
                    v_abs = Vec2(v_abs.x * 13.0 / speed, v_abs.y * 13.0 / speed)
                players.append(
                    PlayerState(
                        player_id=f"{'H' if team == 'home' else 'A'}{i}",
                        team=team,
                        position=Vec2(snap(_clamp(x_abs, 0, L)), snap(_clamp(y_abs, 0, W))),
                        velocity=v_abs,
                        extrapolated=bool(rng.random() < 0.05),
                    )
                )
        bx = ball_x_or if att_dir_abs > 0 else L - ball_x_or
        by = ball_y if att_dir_abs > 0 else W - ball_y
        bv = Vec2(att_dir_abs * ball_vx_or, rng.normal(0.0, 2.0))
        bs = bv.norm()
        if bs > 40.0:
            bv = Vec2(bv.x * 40.0 / bs, bv.y * 40.0 / bs)
        frame = Frame(
            frame_id=next_frame_id,
            timestamp=round(ts, 3),
            period=period,
            players=tuple(players),
            ball=BallState(Vec2(snap(_clamp(bx, 0, L)), snap(_clamp(by, 0, W))), bv),
            attacking_team=attacking,
        )
        frames.append(frame)
        next_frame_id += 1
        return frame

    for k in range(config.n_sequences):
        team = "home" if k % 2 == 0 else "away"
        attack_dir = 1.0 if attacks_positive_x(team, 1) else -1.0
        opponent = "away" if team == "home" else "home"
        success = bool(rng.random() < config.success_rate)
        ends_in_shot = (not success) and bool(rng.random() < config.shot_failure_share)

        # filler possession by the opponent so the regain is a real turnover
        emit_event(t - 0.6, opponent, "pass", rng.uniform(40, 60), rng.uniform(10, 58), "success")
        emit_event(t - 0.3, opponent, "pass", rng.uniform(40, 60), rng.uniform(10, 58), "success")
        # occasional open-play shot between sequences
        if k % 7 == 3:
            emit_event(t - 0.2, opponent, "shot", rng.uniform(70, 90), rng.uniform(20, 48), "failure")
            oracle.shots_total += 1

        t0 = t
        t_end = t0 + span
        start = emit_event(t0, team, "recovery", rng.uniform(15.0, 35.0), rng.uniform(8, 60), "success")
        x0 = start.location.x if attack_dir > 0 else L - start.location.x
        # three completed passes marching the ball forward
        for j, frac in enumerate((0.3, 0.55, 0.8)):
            emit_event(
                t0 + frac * span,
                team,
                "pass",
                x0 + (j + 1) * 15.0,
                rng.uniform(10, 58),
                "success",
            )
        if success:
            end = emit_event(
                t_end, team, "reception", rng.uniform(90.0, 103.0), rng.uniform(16.0, 52.0), "success"
            )
        elif ends_in_shot:
            end = emit_event(t_end, team, "shot", rng.uniform(75.0, 86.0), rng.uniform(20, 48), "failure")
            oracle.shots_total += 1
            oracle.shots_in_sequences += 1
        else:
            end = emit_event(
                t_end, opponent, "interception", L - rng.uniform(75.0, 86.0), rng.uniform(10, 58), "success"
            )

        seq_frame_ids = []
        for j in range(n_frames_seq):
            f = emit_frame(t0 + j * FRAME_DT, team, success)
            seq_frame_ids.append(f.frame_id)
        # a couple of dead frames in the gap
        emit_frame(t_end + 0.8, opponent, False)

        oracle.sequences.append(
            CounterattackSequence(
                match_id=config.match_id,
                team=team,
                start_event_id=start.event_id,
                end_event_id=end.event_id,
                start_ts=round(t0, 3),
                end_ts=round(t_end, 3),
                label="success" if success else "failure",
                frame_ids=tuple(seq_frame_ids),
            )
        )
        t = t_end + gap

    # annotate events with nearest frame ids
    frame_ts = np.array([f.timestamp for f in frames]) if frames else np.array([])
    annotated = []
    for ev in events:
        if len(frame_ts):
            idx = int(np.argmin(np.abs(frame_ts - ev.timestamp)))
            ev = EventRecord(
                **{**ev.__dict__, "frame_id": frames[idx].frame_id}
            )
        annotated.append(ev)

    match = SyncedMatch(
        match_id=config.match_id,
        gender=config.gender,
        frames=tuple(frames),
        events=tuple(annotated),
        pitch=pitch,
    )
    return match, oracle
