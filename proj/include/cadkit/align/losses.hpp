#pragma once

#include <vector>

#include "cadkit/align/ops.hpp"

namespace cadkit::align {

/// Symmetric InfoNCE over B matched rows: rows are L2-normalized, cosine
/// similarities are divided by eta, and the two directions' cross-entropies
/// are summed and scaled by -1/(2B).
Tensor contrastive_loss(const Tensor& z_con, const Tensor& t_eos, double eta);

/// Same loss from a precomputed B x B similarity matrix.
Tensor contrastive_from_similarity(const Tensor& sim, double eta);

/// Teacher-forced token cross-entropy summed over positions and averaged over
/// the batch. targets[i] < 0 masks row i.
Tensor captioning_loss(const Tensor& logits, const std::vector<int>& targets, std::size_t batch);

Tensor total_loss(const Tensor& l_con, const Tensor& l_cap, double lambda_con, double lambda_cap);
double total_loss(double l_con, double l_cap, double lambda_con, double lambda_cap);

/// Cross-entropy over the target positions of [z_proj ; prompt ; code]
/// sequences. Feature and prompt rows carry target -1.
Tensor stage1_loss(const Tensor& logits, const std::vector<int>& targets, std::size_t batch);

}  // namespace cadkit::align
