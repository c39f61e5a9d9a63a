"""Permutation feature importance, split by attacking/defending role.

A feature's importance is the drop in test AUC after globally shuffling
that feature's values across all selected nodes (attackers or defenders,
never the ball) over the whole test set, repeated with independent seeds.
Edge features are excluded: shuffling them would break graph geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Literal

import numpy as np

from .errors import DataError
from .graphs import (
    ATTACKING_FLAG_INDEX,
    FEATURE_NAMES,
    GraphDataset,
    GraphSample,
    N_CONTINUOUS,
)
from .metrics import roc_auc
from .model import ModelParams, predict_many

Role = Literal["attacking", "defending"]
ROLES: tuple[Role, Role] = ("attacking", "defending")


@dataclass(frozen=True)
class ImportanceRow:
    feature_name: str
    role: Role
    mean_delta_auc: float
    std_delta_auc: float
    n_repeats: int
    base_auc: float


@dataclass
class ImportanceReport:
    rows: list[ImportanceRow]
    base_auc: float
    n_repeats: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "base_auc": self.base_auc,
            "n_repeats": self.n_repeats,
            "seed": self.seed,
            "rows": [asdict(r) for r in self.rows],
        }


def _role_mask(sample: GraphSample, role: Role) -> np.ndarray:
    """Node selector for a role; the ball (last node) is never selected."""
    flags = sample.nodes[:, ATTACKING_FLAG_INDEX]
    mask = flags == (1.0 if role == "attacking" else 0.0)
    mask[-1] = False
    return mask


def permute_feature(
    samples: list[GraphSample],
    feature_index: int,
    role: Role,
    seed: int = 0,
    permutation: np.ndarray | None = None,
) -> list[GraphSample]:
    """Globally shuffle one feature over all selected nodes in all graphs.

    Returns new samples; the inputs are untouched.  The value multiset of
    the shuffled column is preserved exactly.  An explicit permutation can
    be injected for testing (identity permutation -> identical output).
    """
    if not 0 <= feature_index < N_CONTINUOUS:
        raise DataError(
            f"feature_index {feature_index} out of range: only the "
            f"{N_CONTINUOUS} continuous features can be shuffled"
        )
    masks = [_role_mask(s, role) for s in samples]
    values = np.concatenate(
        [s.nodes[m, feature_index] for s, m in zip(samples, masks)]
    )
    if permutation is None:
        rng = np.random.default_rng(seed)
        permutation = rng.permutation(values.size)
    shuffled = values[permutation]
    out = []
    off = 0
    for s, m in zip(samples, masks):
        k = int(m.sum())
        nodes = s.nodes.copy()
        nodes[m, feature_index] = shuffled[off : off + k]
        off += k
        out.append(
            GraphSample(
                nodes=nodes,
                edge_index=s.edge_index,
                edge_attr=s.edge_attr,
                label=s.label,
                frame_id=s.frame_id,
                match_id=s.match_id,
                gender=s.gender,
                sequence_id=s.sequence_id,
            )
        )
    return out


def permutation_importance(
    params: ModelParams,
    test_set: GraphDataset | list[GraphSample],
    n_repeats: int = 15,
    seed: int = 0,
) -> ImportanceReport:
    """Mean/std AUC drop per (continuous feature, role) over shuffle repeats.

    Rows are ordered by mean_delta_auc descending.
    """
    samples = test_set.samples if isinstance(test_set, GraphDataset) else list(test_set)
    if n_repeats < 1:
        raise DataError("n_repeats must be at least 1")
    labels = np.array([s.label for s in samples], dtype=np.float64)
    base_preds = predict_many(params, samples)
    base_auc = roc_auc(base_preds, labels)

    seed_seq = np.random.SeedSequence(seed)
    rows: list[ImportanceRow] = []
    for feature_index in range(N_CONTINUOUS):
        for role in ROLES:
            deltas = np.empty(n_repeats)
            child_seeds = seed_seq.spawn(1)[0].generate_state(n_repeats)
            for r in range(n_repeats):
                permuted = permute_feature(
                    samples, feature_index, role, seed=int(child_seeds[r])
                )
                preds = predict_many(params, permuted)
                deltas[r] = base_auc - roc_auc(preds, labels)
            rows.append(
                ImportanceRow(
                    feature_name=FEATURE_NAMES[feature_index],
                    role=role,
                    mean_delta_auc=float(np.mean(deltas)),
                    std_delta_auc=float(np.std(deltas)),
                    n_repeats=n_repeats,
                    base_auc=base_auc,
                )
            )
    rows.sort(key=lambda r: (-r.mean_delta_auc, r.feature_name, r.role))
    return ImportanceReport(rows=rows, base_auc=base_auc, n_repeats=n_repeats, seed=seed)
