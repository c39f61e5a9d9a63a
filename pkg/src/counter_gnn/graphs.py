"""Frame-to-graph conversion: node features, edge features, adjacency.

Node feature order is fixed and versioned; permutation importance and
weight serialization depend on these indices staying put.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detector import LabeledFrame
from .errors import DataError, ParseError, SchemaError
from .tracking import Frame, PitchSpec, PLAYER_MAX_SPEED

FEATURE_NAMES = (
    "x_norm",
    "y_norm",
    "vx_norm",
    "vy_norm",
    "speed_norm",
    "dir_norm",
    "dist_goal_norm",
    "angle_goal_norm",
    "dist_ball_norm",
    "angle_ball_norm",
    "attacking_flag",
)
GENDER_FEATURE = "gender_flag"
N_CONTINUOUS = 10  # the shuffleable features; the flags are excluded
ATTACKING_FLAG_INDEX = FEATURE_NAMES.index("attacking_flag")
EDGE_FEATURE_NAMES = ("sin_angle", "cos_angle", "dist_norm")
DATASET_VERSION = 1

MIN_DIR_SPEED = 0.1  # m/s; below this the direction feature is 0 by convention


@dataclass(frozen=True)
class GraphSample:
    """One frame as a graph.  The ball is always the last node."""

    nodes: np.ndarray  # (n_nodes, F) float64
    edge_index: np.ndarray  # (n_edges, 2) int64, row = (receiver i, sender j)
    edge_attr: np.ndarray  # (n_edges, 3) float64
    label: int
    frame_id: int
    match_id: str
    gender: str
    sequence_id: int = -1

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def feature_width(self) -> int:
        return self.nodes.shape[1]


@dataclass
class GraphDataset:
    samples: list[GraphSample]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        widths = {s.feature_width for s in self.samples}
        if len(widths) > 1:
            raise DataError(f"samples disagree on feature width: {sorted(widths)}")

    @property
    def feature_width(self) -> int:
        return len(self.feature_names)

    def gender_mix(self) -> dict[str, int]:
        mix: dict[str, int] = {}
        for s in self.samples:
            mix[s.gender] = mix.get(s.gender, 0) + 1
        return mix


def _clip01(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def _dir_norm(vx: float, vy: float) -> float:
    if math.hypot(vx, vy) < MIN_DIR_SPEED:
        return 0.0
    theta = math.atan2(vy, vx) % (2.0 * math.pi)
    return theta / (2.0 * math.pi)


def compute_node_features(
    frame: LabeledFrame, pitch: PitchSpec | None = None, gender_aware: bool = False
) -> np.ndarray:
    """Node feature matrix for a canonicalized (+x attacking) frame.

    Rows are players in frame order, then the ball.  All values in [0, 1].
    """
    pitch = pitch or PitchSpec()
    f = frame.frame
    L, W, diag = pitch.length, pitch.width, pitch.diagonal
    vmax = PLAYER_MAX_SPEED
    gx, gy = L, W / 2.0  # attacking goal in canonical orientation
    bx, by = f.ball.position.x, f.ball.position.y
    width = len(FEATURE_NAMES) + (1 if gender_aware else 0)
    out = np.zeros((len(f.players) + 1, width))

    def fill(row, x, y, vx, vy, attacking_flag, is_ball):
        speed = math.hypot(vx, vy)
        row[0] = _clip01(x / L)
        row[1] = _clip01(y / W)
        row[2] = _clip01((vx / vmax + 1.0) / 2.0)
        row[3] = _clip01((vy / vmax + 1.0) / 2.0)
        row[4] = _clip01(speed / vmax)
        row[5] = _dir_norm(vx, vy)
        row[6] = _clip01(math.hypot(x - gx, y - gy) / diag)
        row[7] = abs(math.atan2(gy - y, gx - x)) / math.pi
        if is_ball:
            row[8] = 0.0
            row[9] = 0.0
        else:
            row[8] = _clip01(math.hypot(x - bx, y - by) / diag)
            row[9] = abs(math.atan2(by - y, bx - x)) / math.pi
        row[10] = attacking_flag
        if gender_aware:
            row[11] = 1.0 if frame.gender == "women" else 0.0

    for i, p in enumerate(f.players):
        flag = 1.0 if p.team == f.attacking_team else 0.0
        fill(out[i], p.position.x, p.position.y, p.velocity.x, p.velocity.y, flag, False)
    fill(
        out[-1],
        bx,
        by,
        f.ball.velocity.x,
        f.ball.velocity.y,
        0.0,  # the ball belongs to neither team
        True,
    )
    return out


def compute_edges(
    frame: LabeledFrame, pitch: PitchSpec | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Directed edges between same-team player pairs and player-ball pairs.

    Returns (edge_index, edge_attr); edge features are (sin, cos, dist_norm)
    of the receiver-to-sender geometry.  Co-located pairs use angle 0.
    """
    pitch = pitch or PitchSpec()
    diag = pitch.diagonal
    f = frame.frame
    n_players = len(f.players)
    ball_idx = n_players
    positions = [(p.position.x, p.position.y) for p in f.players]
    positions.append((f.ball.position.x, f.ball.position.y))
    teams = [p.team for p in f.players]

    pairs: list[tuple[int, int]] = []
    for i in range(n_players):
        for j in range(n_players):
            if i != j and teams[i] == teams[j]:
                pairs.append((i, j))
        pairs.append((i, ball_idx))
        pairs.append((ball_idx, i))

    edge_index = np.array(pairs, dtype=np.int64).reshape(len(pairs), 2)
    edge_attr = np.zeros((len(pairs), 3))
    for k, (i, j) in enumerate(pairs):
        xi, yi = positions[i]
        xj, yj = positions[j]
        dx, dy = xj - xi, yj - yi
        dist = math.hypot(dx, dy)
        theta = math.atan2(dy, dx) if dist > 0.0 else 0.0
        edge_attr[k, 0] = math.sin(theta)
        edge_attr[k, 1] = math.cos(theta)
        edge_attr[k, 2] = _clip01(dist / diag)
    return edge_index, edge_attr


def frame_to_graph(
    frame: LabeledFrame,
    pitch: PitchSpec | None = None,
    gender_aware: bool = False,
) -> GraphSample:
    nodes = compute_node_features(frame, pitch, gender_aware)
    edge_index, edge_attr = compute_edges(frame, pitch)
    return GraphSample(
        nodes=nodes,
        edge_index=edge_index,
        edge_attr=edge_attr,
        label=frame.label,
        frame_id=frame.frame.frame_id,
        match_id="",
        gender=frame.gender,
        sequence_id=frame.sequence_ref,
    )


def build_dataset(
    labeled_frames: list[LabeledFrame],
    pitch: PitchSpec | None = None,
    gender_aware: bool = False,
    match_id: str = "",
    source: str = "",
) -> GraphDataset:
    samples = []
    for lf in labeled_frames:
        s = frame_to_graph(lf, pitch, gender_aware)
        samples.append(
            GraphSample(
                nodes=s.nodes,
                edge_index=s.edge_index,
                edge_attr=s.edge_attr,
                label=s.label,
                frame_id=s.frame_id,
                match_id=match_id,
                gender=s.gender,
                sequence_id=s.sequence_id,
            )
        )
    names = FEATURE_NAMES + ((GENDER_FEATURE,) if gender_aware else ())
    ds = GraphDataset(samples=samples, feature_names=names)
    ds.metadata = {
        "version": DATASET_VERSION,
        "source": source,
        "gender_mix": ds.gender_mix(),
    }
    return ds


def split_balanced(
    dataset: GraphDataset, train_fraction: float = 0.7, seed: int = 0
) -> tuple[GraphDataset, GraphDataset]:
    """Sequence-level split, then exact 50/50 class balance on the train side.

    All frames of one counterattack land on the same side; the train
    majority class is downsampled (at frame level) to the minority count.
    """
    rng = np.random.default_rng(seed)
    by_seq: dict[tuple[str, int], list[GraphSample]] = {}
    for s in dataset.samples:
        by_seq.setdefault((s.match_id, s.sequence_id), []).append(s)
    pos_seqs = [k for k, v in by_seq.items() if v[0].label == 1]
    neg_seqs = [k for k, v in by_seq.items() if v[0].label == 0]
    if not pos_seqs or not neg_seqs:
        raise DataError("both classes must be present to split")

    train_samples: list[GraphSample] = []
    test_samples: list[GraphSample] = []
    for seqs in (pos_seqs, neg_seqs):
        order = sorted(seqs)
        rng.shuffle(order)
        total = sum(len(by_seq[k]) for k in order)
        acc = 0
        for k in order:
            if acc < train_fraction * total:
                train_samples.extend(by_seq[k])
                acc += len(by_seq[k])
            else:
                test_samples.extend(by_seq[k])

    pos = [s for s in train_samples if s.label == 1]
    neg = [s for s in train_samples if s.label == 0]
    m = min(len(pos), len(neg))
    if len(pos) > m:
        idx = rng.choice(len(pos), size=m, replace=False)
        pos = [pos[i] for i in sorted(idx)]
    if len(neg) > m:
        idx = rng.choice(len(neg), size=m, replace=False)
        neg = [neg[i] for i in sorted(idx)]
    train = GraphDataset(pos + neg, dataset.feature_names, dict(dataset.metadata))
    test = GraphDataset(test_samples, dataset.feature_names, dict(dataset.metadata))
    train.metadata["gender_mix"] = train.gender_mix()
    test.metadata["gender_mix"] = test.gender_mix()
    return train, test


def filter_gender(dataset: GraphDataset, gender: str) -> GraphDataset:
    subset = [s for s in dataset.samples if s.gender == gender]
    out = GraphDataset(subset, dataset.feature_names, dict(dataset.metadata))
    out.metadata["gender_mix"] = out.gender_mix()
    return out


def save_dataset(dataset: GraphDataset, path: str | Path) -> None:
    """Header record then one GraphSample per line (JSONL, round-trip exact)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "feature_names": list(dataset.feature_names),
            "version": dataset.metadata.get("version", DATASET_VERSION),
            "n_samples": len(dataset.samples),
            "gender_mix": dataset.gender_mix(),
            "source": dataset.metadata.get("source", ""),
        }
        fh.write(json.dumps(header) + "\n")
        for s in dataset.samples:
            fh.write(
                json.dumps(
                    {
                        "nodes": s.nodes.tolist(),
                        "edges": s.edge_index.tolist(),
                        "edge_attr": s.edge_attr.tolist(),
                        "label": s.label,
                        "frame_id": s.frame_id,
                        "match_id": s.match_id,
                        "gender": s.gender,
                        "sequence_id": s.sequence_id,
                    }
                )
                + "\n"
            )


def load_graph_payload(obj: dict) -> GraphSample:
    nodes = np.asarray(obj["nodes"], dtype=np.float64)
    if nodes.ndim != 2:
        raise SchemaError("nodes", "node matrix must be 2-D")
    edges = np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 2)
    edge_attr = np.asarray(obj["edge_attr"], dtype=np.float64).reshape(-1, 3)
    if edges.shape[0] != edge_attr.shape[0]:
        raise SchemaError("edge_attr", "edge list and edge features disagree on count")
    return GraphSample(
        nodes=nodes,
        edge_index=edges,
        edge_attr=edge_attr,
        label=int(obj["label"]),
        frame_id=int(obj.get("frame_id", -1)),
        match_id=str(obj.get("match_id", "")),
        gender=str(obj.get("gender", "women")),
        sequence_id=int(obj.get("sequence_id", -1)),
    )


def load_dataset(path: str | Path) -> GraphDataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ParseError(str(path), 1, "missing dataset header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), 1, exc.msg) from exc
    names = tuple(header["feature_names"])
    samples = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(str(path), line_no, exc.msg) from exc
        s = load_graph_payload(obj)
        if s.feature_width != len(names):
            raise SchemaError("nodes", f"feature width {s.feature_width} != header {len(names)}", line_no)
        samples.append(s)
    ds = GraphDataset(samples, names)
    ds.metadata = {
        "version": header.get("version", DATASET_VERSION),
        "source": header.get("source", ""),
        "gender_mix": header.get("gender_mix", {}),
    }
    return ds
