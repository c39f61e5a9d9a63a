"""Forward/backward correctness, invariances, and weight serialization."""

import math

import numpy as np
import pytest

from counter_gnn.errors import ChecksumError, DataError, FeatureWidthError, WeightFormatError
from counter_gnn.graphs import FEATURE_NAMES, GraphSample
from counter_gnn.model import (
    ModelParams,
    batch_loss,
    crystal_conv,
    forward,
    gradient,
    load_params,
    loss,
    pack,
    predict,
    predict_many,
    save_params,
)

from conftest import random_graph


def _permute_graph(g: GraphSample, perm: np.ndarray) -> GraphSample:
    """Relabel nodes by perm (new_index = position of old index in perm)."""
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return GraphSample(
        nodes=g.nodes[perm],
        edge_index=inv[g.edge_index],
        edge_attr=g.edge_attr,
        label=g.label,
        frame_id=g.frame_id,
        match_id=g.match_id,
        gender=g.gender,
        sequence_id=g.sequence_id,
    )


class TestCrystalConv:
    def test_zero_edges_identity(self):
        rng = np.random.default_rng(0)
        p = ModelParams.init(11, 8, seed=0)
        x = rng.random((5, 11))
        out = crystal_conv(
            p.w_gate[0], p.b_gate[0], p.w_tran[0], p.b_tran[0],
            x, np.zeros((0, 2), dtype=np.int64), np.zeros((0, 3)),
        )
        assert np.array_equal(out, x)

    def test_zero_weights_add_half_ln2_per_neighbor(self):
        g = random_graph(np.random.default_rng(1))
        F = g.feature_width
        zdim = 2 * F + 3
        zeros = np.zeros((zdim, F))
        out = crystal_conv(
            zeros, np.zeros(F), zeros, np.zeros(F),
            g.nodes, g.edge_index, g.edge_attr,
        )
        in_degree = np.bincount(g.edge_index[:, 0], minlength=g.n_nodes)
        expected = g.nodes + in_degree[:, None] * 0.5 * math.log(2.0)
        assert np.allclose(out, expected, atol=1e-12)

    def test_width_preserved_each_layer(self):
        g = random_graph(np.random.default_rng(2))
        p = ModelParams.init(g.feature_width, 8, seed=0)
        x = g.nodes
        for layer in range(p.n_layers):
            x = crystal_conv(
                p.w_gate[layer], p.b_gate[layer], p.w_tran[layer], p.b_tran[layer],
                x, g.edge_index, g.edge_attr,
            )
            assert x.shape == g.nodes.shape


class TestForward:
    def test_zero_head_gives_half(self):
        g = random_graph(np.random.default_rng(3))
        p = ModelParams.init(g.feature_width, 8, seed=0)
        p.w_out[:] = 0.0
        p.b_out[:] = 0.0
        assert predict(p, g) == 0.5

    def test_prediction_in_open_interval(self):
        rng = np.random.default_rng(4)
        p = ModelParams.init(11, 8, seed=0)
        for _ in range(20):
            v = predict(p, random_graph(rng))
            assert 0.0 < v < 1.0

    def test_deterministic(self):
        g = random_graph(np.random.default_rng(5))
        p = ModelParams.init(g.feature_width, 8, seed=0)
        assert predict(p, g) == predict(p, g)

    def test_dropout_rate_zero_matches_inactive(self):
        g = random_graph(np.random.default_rng(6))
        p = ModelParams.init(g.feature_width, 8, seed=0)
        batch = pack([g])
        inactive, _ = forward(p, batch, None)
        mask = np.ones((1, 8))  # rate 0 keeps everything at scale 1
        active, _ = forward(p, batch, mask)
        assert np.array_equal(inactive, active)

    def test_feature_width_mismatch(self):
        g = random_graph(np.random.default_rng(7), gender_aware=True)
        p = ModelParams.init(11, 8, seed=0)
        with pytest.raises(FeatureWidthError) as exc:
            predict(p, g)
        assert exc.value.expected == 11
        assert exc.value.got == 12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(8)
        p = ModelParams.init(11, 8, seed=0)
        for _ in range(20):
            g = random_graph(rng)
            base = predict(p, g)
            perm = rng.permutation(g.n_nodes)
            assert abs(predict(p, _permute_graph(g, perm)) - base) < 1e-12


class TestLoss:
    def test_half(self):
        assert loss(0.5, 0) == pytest.approx(math.log(2.0))
        assert loss(0.5, 1) == pytest.approx(math.log(2.0))

    def test_perfect_hits_clamp_floor(self):
        assert loss(1.0, 1) == pytest.approx(0.0, abs=1e-6)
        assert loss(0.0, 0) == pytest.approx(0.0, abs=1e-6)

    def test_wrong_confident(self):
        assert loss(0.9, 0) == pytest.approx(-math.log(0.1), rel=1e-9)


class TestGradient:
    @staticmethod
    def _fd_check(p, samples, rng, n_probes=6, h=1e-5):
        labels = np.array([s.label for s in samples], dtype=float)
        grads, _ = gradient(p, samples)
        worst = 0.0
        for a, ga in zip(p.arrays(), grads.arrays()):
            flat, gflat = a.ravel(), ga.ravel()
            for _ in range(n_probes):
                i = int(rng.integers(flat.size))
                orig = flat[i]
                flat[i] = orig + h
                lp = batch_loss(predict_many(p, samples), labels)
                flat[i] = orig - h
                lm = batch_loss(predict_many(p, samples), labels)
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                worst = max(worst, abs(fd - gflat[i]) / max(1.0, abs(gflat[i])))
        return worst

    def test_finite_difference_spot_check(self):
        rng = np.random.default_rng(0)
        p = ModelParams.init(11, 8, seed=1)
        samples = [random_graph(rng) for _ in range(3)]
        assert self._fd_check(p, samples, rng) < 1e-4

    def test_duplicated_sample_same_gradient(self):
        g = random_graph(np.random.default_rng(1))
        p = ModelParams.init(g.feature_width, 8, seed=0)
        g1, _ = gradient(p, [g])
        g2, _ = gradient(p, [g, g])
        for a, b in zip(g1.arrays(), g2.arrays()):
            assert np.allclose(a, b, atol=1e-12)

    def test_zero_edge_graph_zero_conv_grads(self):
        g = random_graph(np.random.default_rng(2))
        bare = GraphSample(
            nodes=g.nodes,
            edge_index=np.zeros((0, 2), dtype=np.int64),
            edge_attr=np.zeros((0, 3)),
            label=1,
            frame_id=0,
            match_id="m",
            gender="women",
        )
        p = ModelParams.init(g.feature_width, 8, seed=0)
        grads, _ = gradient(p, [bare])
        for layer in range(p.n_layers):
            assert np.all(grads.w_gate[layer] == 0.0)
            assert np.all(grads.w_tran[layer] == 0.0)
            assert np.all(grads.b_gate[layer] == 0.0)
            assert np.all(grads.b_tran[layer] == 0.0)

    def test_empty_batch_rejected(self):
        p = ModelParams.init(11, 8, seed=0)
        with pytest.raises(DataError):
            gradient(p, [])


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        p = ModelParams.init(11, 16, seed=3)
        path = tmp_path / "m.cgnn"
        save_params(p, path)
        q = load_params(path)
        for a, b in zip(p.arrays(), q.arrays()):
            assert np.array_equal(a, b)

    def test_truncated_file_rejected(self, tmp_path):
        p = ModelParams.init(11, 16, seed=3)
        path = tmp_path / "m.cgnn"
        save_params(p, path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(WeightFormatError):
            load_params(path)

    def test_flipped_byte_rejected_by_checksum(self, tmp_path):
        p = ModelParams.init(11, 16, seed=3)
        path = tmp_path / "m.cgnn"
        save_params(p, path)
        data = bytearray(path.read_bytes())
        data[len(data) // 2] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(ChecksumError):
            load_params(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.cgnn"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(WeightFormatError):
            load_params(path)

    def test_gender_aware_width_mismatch_is_explicit(self, tmp_path):
        p11 = ModelParams.init(11, 8, seed=0)
        g12 = random_graph(np.random.default_rng(0), gender_aware=True)
        with pytest.raises(FeatureWidthError):
            predict(p11, g12)
