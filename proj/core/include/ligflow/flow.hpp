#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ligflow/autodiff.hpp"
#include "ligflow/error.hpp"
#include "ligflow/geom.hpp"
#include "ligflow/hetgraph.hpp"
#include "ligflow/rng.hpp"

namespace ligflow::flow {

struct ContinuousPathParams {
  double p_distort = 0.2;
  double t_distort = 0.5;
  double sigma_distort = 0.5;  // std-dev of the per-atom displacement, in A
};

struct DiscretePathParams {
  int vocab_size = 0;
  int mask_token = 0;
  double eta = 0.0;  // remasking rate at inference
};

struct GaussianPrior {
  Vec3 mean{};                // ligand center of mass
  double variance = 2.573;    // A^2, per axis
};

// Default modality loss weights: 1.0 for positions, 0.5 per discrete modality.
struct LossWeights {
  std::map<std::string, double> weights;

  double at(const std::string& id) const {
    auto it = weights.find(id);
    if (it == weights.end()) fail(Errc::missing_weight, id);
    return it->second;
  }
  static LossWeights defaults_for(const graph::ModalityRegistry& registry);
};

std::vector<Vec3> sample_position_prior(int n_atoms, const GaussianPrior& prior, Rng& rng);

// Identity pairing; throws SizeMismatch when counts differ.
void independent_coupling(std::span<const Vec3> x0, std::span<const Vec3> x1);

// Permutation sigma minimizing sum_i |x0[sigma[i]] - x1[i]|^2, solved exactly
// with the Hungarian algorithm on the squared-distance cost matrix.
std::vector<int> permutation_coupling(std::span<const Vec3> x0, std::span<const Vec3> x1);

// Exact solver for a square assignment problem; returns, for each column j,
// the row assigned to it. Exposed for reuse and direct testing.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

// X_t = (1-t) x0 + t x1 + [t >= t_distort] (M . eps) with M ~ Bern(p_distort)
// and eps ~ N(0, sigma_distort^2 I3) per atom.
std::vector<Vec3> interpolate_positions(std::span<const Vec3> x0, std::span<const Vec3> x1,
                                        double t, const ContinuousPathParams& params, Rng& rng);

// Masked discrete path: each token keeps its data value with probability t,
// otherwise it is the mask token.
std::vector<std::int32_t> mask_interpolate_discrete(std::span<const std::int32_t> x1_tokens,
                                                    double t, const DiscretePathParams& params,
                                                    Rng& rng);

// (1-t)^-2 weighted mean squared error; t is clamped to kTimeClamp.
inline constexpr double kTimeClamp = 0.999;
double denoising_loss(std::span<const Vec3> x1_pred, std::span<const Vec3> x1_true, double t);

// Cross entropy over masked positions, averaged; zero when nothing is masked.
double discrete_ce_loss(const ad::Tensor& logits, std::span<const std::int32_t> x1_true,
                        std::span<const std::int32_t> x_t, int mask_token);

double multimodal_loss(const std::map<std::string, double>& per_modality_losses,
                       const LossWeights& weights);

std::vector<Vec3> euler_step_positions(std::span<const Vec3> x_t, std::span<const Vec3> x1_pred,
                                       double t, double dt);

// One CTMC step: masked tokens unmask with probability dt*(1+eta*t)/(1-t),
// drawing from softmax(logits) excluding the mask token; unmasked tokens
// remask with probability dt*eta (suppressed on the final step so the
// terminal state carries no masks).
std::vector<std::int32_t> ctmc_step_discrete(std::span<const std::int32_t> x_t,
                                             const ad::Tensor& logits, double t, double dt,
                                             const DiscretePathParams& params, Rng& rng);

// Unordered-pair view of a directed edge set: pairs are sorted (i < j) and
// edge_slots[p] lists the directed-edge indices realizing pair p.
struct PairIndex {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  std::vector<std::vector<std::size_t>> edge_slots;
};

PairIndex build_pair_index(const graph::EdgeSet& edges);

// What a denoiser must produce for the generated modalities of a task.
struct PairLogits {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;  // unordered, i < j
  ad::Tensor logits;                                         // [n_pairs, vocab]
};

struct DenoiserOutput {
  std::map<std::string, std::vector<Vec3>> positions;
  std::map<std::string, ad::Tensor> node_logits;  // [n_nodes, vocab]
  std::map<std::string, PairLogits> edge_logits;
};

using Denoiser = std::function<DenoiserOutput(const graph::FlowState&)>;

struct SamplerConfig {
  int n_steps = 100;
  double eta = 0.0;
  ContinuousPathParams path;  // sigma parameters are training-only; kept for symmetry
};

// Integrates all generated modalities jointly from t=0 to t=1 with n_steps
// uniform steps; returns n_steps+1 states including both endpoints.
// Conditioning buffers are never touched.
std::vector<graph::FlowState> sample_trajectory(const graph::TaskSpec& task,
                                                const graph::ModalityRegistry& registry,
                                                const graph::FlowState& init,
                                                const Denoiser& denoiser, int n_steps, Rng& rng,
                                                double eta = 0.0);

}  // namespace ligflow::flow
