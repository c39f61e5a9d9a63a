"""Shared fixtures and graph/frame builders for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from counter_gnn.detector import DetectorConfig, LabeledFrame, detect_counterattacks, label_frames
from counter_gnn.graphs import FEATURE_NAMES, GraphSample, build_dataset
from counter_gnn.synthetic import SynthConfig, generate_synthetic_match
from counter_gnn.tracking import BallState, Frame, PitchSpec, PlayerState, Vec2, snap

# Permissive thresholds that accept every rule-conforming generated sequence.
PERMISSIVE_DETECTOR = DetectorConfig(
    regain_zone_max_x=1.0,
    max_completed_passes=10,
    max_duration=30.0,
    min_forward_progress=1.0,
    progress_window=30.0,
)


def make_player(pid, team, x, y, vx=0.0, vy=0.0, extrapolated=False):
    return PlayerState(
        player_id=pid,
        team=team,
        position=Vec2(snap(x), snap(y)),
        velocity=Vec2(vx, vy),
        extrapolated=extrapolated,
    )


def make_frame(players, ball_x=52.5, ball_y=34.0, ball_vx=0.0, ball_vy=0.0,
               frame_id=0, timestamp=0.0, period=1, attacking_team="home"):
    return Frame(
        frame_id=frame_id,
        timestamp=timestamp,
        period=period,
        players=tuple(players),
        ball=BallState(Vec2(snap(ball_x), snap(ball_y)), Vec2(ball_vx, ball_vy)),
        attacking_team=attacking_team,
    )


def random_frame(rng: np.random.Generator, n_home=None, n_away=None) -> Frame:
    """A random valid frame with home attacking +x."""
    pitch = PitchSpec()
    n_home = int(rng.integers(2, 12)) if n_home is None else n_home
    n_away = int(rng.integers(2, 12)) if n_away is None else n_away
    players = []
    for t, n in (("home", n_home), ("away", n_away)):
        for i in range(n):
            speed_scale = 13.0 / math.sqrt(2.0)
            players.append(
                make_player(
                    f"{t[0].upper()}{i}", t,
                    float(rng.uniform(0, pitch.length)),
                    float(rng.uniform(0, pitch.width)),
                    float(rng.uniform(-speed_scale, speed_scale)),
                    float(rng.uniform(-speed_scale, speed_scale)),
                )
            )
    return make_frame(
        players,
        ball_x=float(rng.uniform(0, pitch.length)),
        ball_y=float(rng.uniform(0, pitch.width)),
        ball_vx=float(rng.uniform(-20, 20)),
        ball_vy=float(rng.uniform(-20, 20)),
        frame_id=int(rng.integers(0, 100000)),
        timestamp=float(rng.uniform(0, 5400)),
    )


def random_graph(rng: np.random.Generator, n_home=None, n_away=None,
                 label=None, gender_aware=False) -> GraphSample:
    """A random valid graph built through the real frame-to-graph pipeline."""
    frame = random_frame(rng, n_home, n_away)
    lf = LabeledFrame(
        frame=frame,
        label=int(rng.integers(0, 2)) if label is None else label,
        sequence_ref=int(rng.integers(0, 1000)),
        gender="women" if rng.random() < 0.5 else "men",
    )
    from counter_gnn.graphs import frame_to_graph

    return frame_to_graph(lf, gender_aware=gender_aware)


@pytest.fixture(scope="session")
def small_match():
    cfg = SynthConfig(n_sequences=30, frames_per_sequence=4)
    return generate_synthetic_match(cfg, seed=0)


@pytest.fixture(scope="session")
def small_dataset(small_match):
    match, oracle = small_match
    labeled = label_frames(match, oracle.sequences)
    return build_dataset(labeled, match.pitch, match_id=match.match_id)


@pytest.fixture(scope="session")
def detected_sequences(small_match):
    match, _ = small_match
    return detect_counterattacks(match, PERMISSIVE_DETECTOR)
