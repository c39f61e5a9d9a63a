"""Node/edge features, adjacency, splitting, and dataset serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from counter_gnn.detector import LabeledFrame
from counter_gnn.errors import DataError
from counter_gnn.graphs import (
    ATTACKING_FLAG_INDEX,
    FEATURE_NAMES,
    GENDER_FEATURE,
    GraphDataset,
    build_dataset,
    compute_edges,
    compute_node_features,
    filter_gender,
    frame_to_graph,
    load_dataset,
    save_dataset,
    split_balanced,
)
from counter_gnn.tracking import PitchSpec

from conftest import make_frame, make_player, random_frame, random_graph


def _labeled(frame, label=0, gender="women", seq=-1):
    return LabeledFrame(frame=frame, label=label, sequence_ref=seq, gender=gender)


class TestNodeFeatures:
    def test_stationary_center_attacker(self):
        frame = make_frame([make_player("H1", "home", 52.5, 34.0)])
        nodes = compute_node_features(_labeled(frame))
        row = nodes[0]
        names = dict(zip(FEATURE_NAMES, row))
        assert names["x_norm"] == pytest.approx(0.5)
        assert names["y_norm"] == pytest.approx(0.5)
        assert names["vx_norm"] == pytest.approx(0.5)
        assert names["vy_norm"] == pytest.approx(0.5)
        assert names["speed_norm"] == 0.0
        assert names["dir_norm"] == 0.0
        assert names["angle_goal_norm"] == 0.0
        assert names["attacking_flag"] == 1.0

    def test_dist_goal_norm_value(self):
        frame = make_frame([make_player("H1", "home", 52.5, 34.0)])
        nodes = compute_node_features(_labeled(frame))
        diag = math.hypot(105.0, 68.0)
        assert nodes[0][FEATURE_NAMES.index("dist_goal_norm")] == pytest.approx(
            52.5 / diag
        )
        assert 52.5 / diag == pytest.approx(0.4197, abs=1e-4)

    def test_defender_clamped_vx(self):
        frame = make_frame(
            [make_player("A1", "away", 30, 30, 13.0, 0.0)], attacking_team="home"
        )
        nodes = compute_node_features(_labeled(frame))
        assert nodes[0][FEATURE_NAMES.index("vx_norm")] == 1.0
        assert nodes[0][ATTACKING_FLAG_INDEX] == 0.0

    def test_ball_row_is_last_with_zero_ball_features(self):
        frame = make_frame([make_player("H1", "home", 20, 20)], ball_x=60, ball_y=30)
        nodes = compute_node_features(_labeled(frame))
        ball = nodes[-1]
        assert ball[FEATURE_NAMES.index("dist_ball_norm")] == 0.0
        assert ball[FEATURE_NAMES.index("angle_ball_norm")] == 0.0
        assert ball[ATTACKING_FLAG_INDEX] == 0.0

    def test_gender_aware_appends_flag(self):
        frame = make_frame([make_player("H1", "home", 20, 20)])
        w = compute_node_features(_labeled(frame, gender="women"), gender_aware=True)
        m = compute_node_features(_labeled(frame, gender="men"), gender_aware=True)
        assert w.shape[1] == len(FEATURE_NAMES) + 1
        assert np.all(w[:, -1] == 1.0)
        assert np.all(m[:, -1] == 0.0)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_all_features_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng)
        assert np.all(g.nodes >= 0.0)
        assert np.all(g.nodes <= 1.0)

    def test_long_axis_mirror_preserves_distances(self):
        frame = make_frame(
            [make_player("H1", "home", 30, 20, 1, 2)], ball_x=50, ball_y=25
        )
        mirrored = make_frame(
            [make_player("H1", "home", 30, 48, 1, -2)], ball_x=50, ball_y=43
        )
        a = compute_node_features(_labeled(frame))
        b = compute_node_features(_labeled(mirrored))
        for name in ("dist_goal_norm", "dist_ball_norm"):
            i = FEATURE_NAMES.index(name)
            assert a[0][i] == pytest.approx(b[0][i], abs=1e-12)


class TestEdges:
    def test_full_frame_edge_count(self):
        players = [make_player(f"H{i}", "home", 5 + i * 4, 20) for i in range(11)]
        players += [make_player(f"A{i}", "away", 7 + i * 4, 40) for i in range(11)]
        ei, ea = compute_edges(_labeled(make_frame(players)))
        assert ei.shape[0] == 2 * (11 * 10) + 2 * 22 == 264

    def test_red_card_edge_count(self):
        players = [make_player(f"H{i}", "home", 5 + i * 4, 20) for i in range(10)]
        players += [make_player(f"A{i}", "away", 7 + i * 4, 40) for i in range(11)]
        ei, _ = compute_edges(_labeled(make_frame(players)))
        assert ei.shape[0] == 10 * 9 + 11 * 10 + 2 * 21 == 242

    def test_colocated_players_use_angle_zero(self):
        players = [
            make_player("H1", "home", 30, 30),
            make_player("H2", "home", 30, 30),
        ]
        ei, ea = compute_edges(_labeled(make_frame(players)))
        same_team = [k for k, (i, j) in enumerate(ei) if i < 2 and j < 2]
        for k in same_team:
            assert ea[k][0] == 0.0  # sin
            assert ea[k][1] == 1.0  # cos
            assert ea[k][2] == 0.0  # dist

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_edge_invariants(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng)
        # sin^2 + cos^2 == 1, dist in [0, 1]
        assert np.allclose(g.edge_attr[:, 0] ** 2 + g.edge_attr[:, 1] ** 2, 1.0, atol=1e-9)
        assert np.all((g.edge_attr[:, 2] >= 0) & (g.edge_attr[:, 2] <= 1))
        # adjacency symmetric, no self-loops
        pairs = {(int(i), int(j)) for i, j in g.edge_index}
        assert all(i != j for i, j in pairs)
        assert all((j, i) in pairs for i, j in pairs)

    def test_edge_count_formula(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = int(rng.integers(2, 12))
            b = int(rng.integers(2, 12))
            g = random_graph(rng, n_home=a, n_away=b)
            assert g.edge_index.shape[0] == a * (a - 1) + b * (b - 1) + 2 * (a + b)


class TestFrameToGraph:
    def test_node_counts(self):
        g = random_graph(np.random.default_rng(0), n_home=11, n_away=11)
        assert g.n_nodes == 23
        g = random_graph(np.random.default_rng(0), n_home=8, n_away=8)
        assert g.n_nodes == 17

    def test_label_copied(self):
        g = random_graph(np.random.default_rng(0), label=1)
        assert g.label == 1


def _toy_dataset(n_pos=6, n_neg=6, frames_per_seq=3):
    rng = np.random.default_rng(0)
    samples = []
    seq = 0
    for label, n in ((1, n_pos), (0, n_neg)):
        for _ in range(n):
            for _ in range(frames_per_seq):
                g = random_graph(rng, label=label)
                samples.append(
                    type(g)(
                        nodes=g.nodes,
                        edge_index=g.edge_index,
                        edge_attr=g.edge_attr,
                        label=label,
                        frame_id=g.frame_id,
                        match_id="m",
                        gender=g.gender,
                        sequence_id=seq,
                    )
                )
            seq += 1
    return GraphDataset(samples)


class TestSplit:
    def test_balanced_and_sequence_level(self):
        ds = _toy_dataset(n_pos=4, n_neg=12)
        train, test = split_balanced(ds, seed=0)
        pos = sum(1 for s in train.samples if s.label == 1)
        neg = sum(1 for s in train.samples if s.label == 0)
        assert pos == neg > 0
        train_seqs = {s.sequence_id for s in train.samples}
        test_seqs = {s.sequence_id for s in test.samples}
        assert not (train_seqs & test_seqs)

    def test_deterministic(self):
        ds = _toy_dataset()
        a1, b1 = split_balanced(ds, seed=5)
        a2, b2 = split_balanced(ds, seed=5)
        assert [s.frame_id for s in a1.samples] == [s.frame_id for s in a2.samples]
        assert [s.frame_id for s in b1.samples] == [s.frame_id for s in b2.samples]

    def test_single_class_errors(self):
        ds = _toy_dataset(n_pos=0, n_neg=5)
        with pytest.raises(DataError):
            split_balanced(ds, seed=0)


class TestFilter:
    def test_filter_gender(self):
        ds = _toy_dataset()
        women = filter_gender(ds, "women")
        assert all(s.gender == "women" for s in women.samples)
        assert len(women.samples) == ds.gender_mix().get("women", 0)

    def test_filter_to_empty(self):
        ds = _toy_dataset()
        only_women = filter_gender(ds, "women")
        none = filter_gender(only_women, "men")
        assert none.samples == []


class TestDatasetIO:
    def test_round_trip_bit_exact(self, tmp_path):
        ds = _toy_dataset(n_pos=2, n_neg=2, frames_per_seq=2)
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.feature_names == ds.feature_names
        assert len(loaded.samples) == len(ds.samples)
        for a, b in zip(ds.samples, loaded.samples):
            assert np.array_equal(a.nodes, b.nodes)
            assert np.array_equal(a.edge_index, b.edge_index)
            assert np.array_equal(a.edge_attr, b.edge_attr)
            assert (a.label, a.frame_id, a.match_id, a.gender, a.sequence_id) == (
                b.label, b.frame_id, b.match_id, b.gender, b.sequence_id
            )

    def test_mixed_width_rejected(self):
        rng = np.random.default_rng(0)
        g11 = random_graph(rng)
        g12 = random_graph(rng, gender_aware=True)
        with pytest.raises(DataError):
            GraphDataset([g11, g12])

    def test_build_dataset_metadata(self, small_dataset):
        assert small_dataset.metadata["gender_mix"] == small_dataset.gender_mix()
        assert small_dataset.feature_names == FEATURE_NAMES
