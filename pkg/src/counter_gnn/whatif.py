"""Counterfactual trajectory search over player movement directions.

Rotating a player's velocity (speed and position preserved), rebuilding
the graph, and re-predicting answers "what if this run went that way
instead".  Deltas are reported in percentage points versus the unedited
frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .detector import LabeledFrame, mirror_frame
from .errors import DataError
from .graphs import FEATURE_NAMES, frame_to_graph
from .model import ModelParams, predict
from .tracking import Frame, Gender, PitchSpec, Vec2, attacks_positive_x

DEFAULT_STEP_DEGREES = 15.0


@dataclass(frozen=True)
class WhatIfResult:
    base_probability: float
    new_probability: float
    delta_percentage_points: float
    sweep: tuple[tuple[float, float], ...] = ()  # (degrees, probability)
    best_degrees: float | None = None


def rotate_velocity(frame: Frame, player_id: str, degrees: float) -> Frame:
    """Rotate one player's velocity vector; position and speed unchanged."""
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    players = list(frame.players)
    for i, p in enumerate(players):
        if p.player_id == player_id:
            v = p.velocity
            players[i] = replace(
                p, velocity=Vec2(c * v.x - s * v.y, s * v.x + c * v.y)
            )
            return replace(frame, players=tuple(players))
    raise DataError(f"unknown player_id {player_id!r}")


def frame_probability(
    params: ModelParams,
    frame: Frame,
    pitch: PitchSpec | None = None,
    gender: Gender = "women",
) -> float:
    """Predict on a raw frame through the standard frame-to-graph pipeline.

    The frame is mirrored first when its attacking team runs toward -x.
    """
    pitch = pitch or PitchSpec()
    if frame.attacking_team == "none":
        raise DataError("frame needs an attacking_team for prediction")
    canonical = frame
    if not attacks_positive_x(frame.attacking_team, frame.period):
        canonical = mirror_frame(frame, pitch)
    labeled = LabeledFrame(frame=canonical, label=0, sequence_ref=-1, gender=gender)
    gender_aware = params.n_node_features == len(FEATURE_NAMES) + 1
    graph = frame_to_graph(labeled, pitch, gender_aware=gender_aware)
    return predict(params, graph)


def sweep_rotations(
    params: ModelParams,
    frame: Frame,
    player_id: str,
    step: float = DEFAULT_STEP_DEGREES,
    pitch: PitchSpec | None = None,
    gender: Gender = "women",
) -> WhatIfResult:
    """Evaluate every rotation k*step for k = 0 .. 360/step - 1.

    The base (k = 0) is in the candidate set, so the best probability is
    never below the base.
    """
    if step <= 0 or abs(360.0 / step - round(360.0 / step)) > 1e-9:
        raise DataError("step must evenly divide 360 degrees")
    n = int(round(360.0 / step))
    sweep = []
    base = None
    for k in range(n):
        degrees = k * step
        rotated = rotate_velocity(frame, player_id, degrees) if k else frame
        p = frame_probability(params, rotated, pitch, gender)
        if k == 0:
            base = p
        sweep.append((degrees, p))
    best_degrees, best_p = max(sweep, key=lambda t: t[1])
    return WhatIfResult(
        base_probability=base,
        new_probability=best_p,
        delta_percentage_points=(best_p - base) * 100.0,
        sweep=tuple(sweep),
        best_degrees=best_degrees,
    )


def joint_whatif(
    params: ModelParams,
    frame: Frame,
    rotations: list[tuple[str, float]],
    pitch: PitchSpec | None = None,
    gender: Gender = "women",
) -> WhatIfResult:
    """Apply several rotations at once and report the combined delta."""
    ids = [pid for pid, _ in rotations]
    if len(ids) != len(set(ids)):
        raise DataError("duplicate player_id in joint what-if")
    base = frame_probability(params, frame, pitch, gender)
    edited = frame
    for pid, degrees in rotations:
        edited = rotate_velocity(edited, pid, degrees)
    p = frame_probability(params, edited, pitch, gender) if rotations else base
    return WhatIfResult(
        base_probability=base,
        new_probability=p,
        delta_percentage_points=(p - base) * 100.0,
    )


def rank_players_by_leverage(
    params: ModelParams,
    frame: Frame,
    step: float = DEFAULT_STEP_DEGREES,
    pitch: PitchSpec | None = None,
    gender: Gender = "women",
) -> list[tuple[str, float]]:
    """Players sorted by their best achievable delta (percentage points).

    Deterministic: ties break on player_id.
    """
    results = []
    for p in frame.players:
        r = sweep_rotations(params, frame, p.player_id, step, pitch, gender)
        results.append((p.player_id, r.delta_percentage_points))
    results.sort(key=lambda t: (-t[1], t[0]))
    return results
