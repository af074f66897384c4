# Copyright 2026 The drmrec Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Ranking-metric training for implicit-feedback matrix factorization."""

from ._core import (
    ConfigError,
    EmptyDatasetError,
    FactorModel,
    InteractionMatrix,
    ModelFormatError,
    NonFiniteGradientError,
    ParseError,
    ap_at,
    config_fingerprint,
    drm_grad_scores,
    drm_loss,
    evaluate,
    fit,
    hard_perm,
    hinge_loss,
    init_model,
    load_interactions,
    make_synthetic,
    mse_loss,
    ndcg_at,
    pearson,
    phi_weight,
    precision_at,
    rank_weights,
    recall_at,
    relaxed_perm_matrix,
    relaxed_perm_row,
    run_experiment,
    softmax,
    split,
    unified_metric,
    weighted_truncated_sum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
