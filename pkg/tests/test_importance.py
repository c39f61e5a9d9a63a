"""Permutation feature importance: multiset preservation, identity, ranking."""

import numpy as np
import pytest

from counter_gnn.errors import DataError
from counter_gnn.graphs import ATTACKING_FLAG_INDEX, FEATURE_NAMES, GraphDataset, N_CONTINUOUS
from counter_gnn.importance import permutation_importance, permute_feature
from counter_gnn.model import ModelParams

from conftest import random_graph


def _labeled_graphs(n=12, seed=0):
    rng = np.random.default_rng(seed)
    return [random_graph(rng, label=i % 2) for i in range(n)]


class TestPermuteFeature:
    def test_multiset_preserved(self):
        samples = _labeled_graphs()
        out = permute_feature(samples, 2, "attacking", seed=1)
        def values(ss):
            vals = []
            for s in ss:
                mask = s.nodes[:, ATTACKING_FLAG_INDEX] == 1.0
                mask[-1] = False
                vals.extend(s.nodes[mask, 2].tolist())
            return sorted(vals)
        assert values(out) == values(samples)

    def test_structure_untouched(self):
        samples = _labeled_graphs()
        out = permute_feature(samples, 4, "defending", seed=2)
        for a, b in zip(samples, out):
            assert np.array_equal(a.edge_index, b.edge_index)
            assert np.array_equal(a.edge_attr, b.edge_attr)
            other = [k for k in range(a.feature_width) if k != 4]
            assert np.array_equal(a.nodes[:, other], b.nodes[:, other])

    def test_original_untouched(self):
        samples = _labeled_graphs()
        before = [s.nodes.copy() for s in samples]
        permute_feature(samples, 0, "attacking", seed=3)
        for s, b in zip(samples, before):
            assert np.array_equal(s.nodes, b)

    def test_seed_reproducible(self):
        samples = _labeled_graphs()
        a = permute_feature(samples, 1, "attacking", seed=7)
        b = permute_feature(samples, 1, "attacking", seed=7)
        for x, y in zip(a, b):
            assert np.array_equal(x.nodes, y.nodes)

    def test_ball_row_excluded(self):
        samples = _labeled_graphs()
        out = permute_feature(samples, 0, "defending", seed=4)
        for a, b in zip(samples, out):
            assert np.array_equal(a.nodes[-1], b.nodes[-1])

    def test_constant_feature_unchanged(self):
        samples = _labeled_graphs()
        fixed = []
        for s in samples:
            nodes = s.nodes.copy()
            nodes[:, 3] = 0.25
            fixed.append(type(s)(
                nodes=nodes, edge_index=s.edge_index, edge_attr=s.edge_attr,
                label=s.label, frame_id=s.frame_id, match_id=s.match_id,
                gender=s.gender, sequence_id=s.sequence_id,
            ))
        out = permute_feature(fixed, 3, "attacking", seed=5)
        for a, b in zip(fixed, out):
            assert np.array_equal(a.nodes, b.nodes)

    def test_flag_index_rejected(self):
        samples = _labeled_graphs()
        with pytest.raises(DataError):
            permute_feature(samples, N_CONTINUOUS, "attacking", seed=0)


class TestPermutationImportance:
    def test_identity_permutation_zero_delta(self):
        from counter_gnn.metrics import roc_auc
        from counter_gnn.model import predict_many

        samples = _labeled_graphs(n=16)
        p = ModelParams.init(11, 8, seed=0)
        identity = np.arange(_n_selected(samples, "attacking"))
        permuted = permute_feature(samples, 0, "attacking", seed=0, permutation=identity)
        for a, b in zip(samples, permuted):
            assert np.array_equal(a.nodes, b.nodes)
        labels = [s.label for s in samples]
        base = roc_auc(predict_many(p, samples), labels)
        after = roc_auc(predict_many(p, permuted), labels)
        assert base - after == 0.0

    def test_constant_predictor_all_deltas_zero(self):
        samples = _labeled_graphs(n=16)
        p = ModelParams.init(11, 8, seed=0)
        p.w_out[:] = 0.0
        p.b_out[:] = 0.0
        report = permutation_importance(p, GraphDataset(samples), n_repeats=2, seed=0)
        assert report.rows
        for row in report.rows:
            assert row.mean_delta_auc == 0.0

    def test_row_shape_and_order(self):
        samples = _labeled_graphs(n=16)
        p = ModelParams.init(11, 8, seed=1)
        report = permutation_importance(p, GraphDataset(samples), n_repeats=2, seed=0)
        assert len(report.rows) == 2 * N_CONTINUOUS  # 20 rows
        deltas = [r.mean_delta_auc for r in report.rows]
        assert deltas == sorted(deltas, reverse=True)
        names = {(r.feature_name, r.role) for r in report.rows}
        assert len(names) == 20
        assert all(r.n_repeats == 2 for r in report.rows)

    def test_deterministic(self):
        samples = _labeled_graphs(n=16)
        p = ModelParams.init(11, 8, seed=1)
        a = permutation_importance(p, GraphDataset(samples), n_repeats=2, seed=3)
        b = permutation_importance(p, GraphDataset(samples), n_repeats=2, seed=3)
        assert [(r.feature_name, r.role, r.mean_delta_auc) for r in a.rows] == [
            (r.feature_name, r.role, r.mean_delta_auc) for r in b.rows
        ]


def _n_selected(samples, role):
    flag = 1.0 if role == "attacking" else 0.0
    n = 0
    for s in samples:
        mask = s.nodes[:, ATTACKING_FLAG_INDEX] == flag
        mask[-1] = False
        n += int(mask.sum())
    return n
