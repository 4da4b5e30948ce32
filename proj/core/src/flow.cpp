#include "ligflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ligflow::flow {

LossWeights LossWeights::defaults_for(const graph::ModalityRegistry& registry) {
  LossWeights w;
  for (const graph::ModalityDescriptor& m : registry.descriptors())
    w.weights[m.id] = m.is_discrete() ? 0.5 : 1.0;
  return w;
}

std::vector<Vec3> sample_position_prior(int n_atoms, const GaussianPrior& prior, Rng& rng) {
  const double std_dev = std::sqrt(prior.variance);
  std::vector<Vec3> out(n_atoms);
  for (Vec3& p : out) p = prior.mean + std_dev * rng.normal_vec3();
  return out;
}

void independent_coupling(std::span<const Vec3> x0, std::span<const Vec3> x1) {
  if (x0.size() != x1.size()) fail(Errc::size_mismatch, "independent_coupling");
}

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  // Hungarian algorithm with row/column potentials, O(n^3).
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_of_col(n);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

std::vector<int> permutation_coupling(std::span<const Vec3> x0, std::span<const Vec3> x1) {
  if (x0.size() != x1.size()) fail(Errc::size_mismatch, "permutation_coupling");
  const int n = static_cast<int>(x0.size());
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[i][j] = norm2(x0[i] - x1[j]);
  // row_of_col[j] = index into x0 paired with x1[j].
  return solve_assignment(cost);
}

std::vector<Vec3> interpolate_positions(std::span<const Vec3> x0, std::span<const Vec3> x1,
                                        double t, const ContinuousPathParams& params, Rng& rng) {
  if (x0.size() != x1.size()) fail(Errc::size_mismatch, "interpolate_positions");
  std::vector<Vec3> out(x0.size());
  const bool distort_window = t >= params.t_distort;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    out[i] = (1.0 - t) * x0[i] + t * x1[i];
    if (distort_window && rng.bernoulli(params.p_distort))
      out[i] += params.sigma_distort * rng.normal_vec3();
  }
  return out;
}

std::vector<std::int32_t> mask_interpolate_discrete(std::span<const std::int32_t> x1_tokens,
                                                    double t, const DiscretePathParams& params,
                                                    Rng& rng) {
  std::vector<std::int32_t> out(x1_tokens.size());
  for (std::size_t i = 0; i < x1_tokens.size(); ++i) {
    if (x1_tokens[i] == params.mask_token || x1_tokens[i] < 0 ||
        x1_tokens[i] >= params.vocab_size)
      fail(Errc::invalid_input, "mask_interpolate_discrete: data token invalid");
    out[i] = rng.uniform() < t ? x1_tokens[i] : params.mask_token;
  }
  return out;
}

double denoising_loss(std::span<const Vec3> x1_pred, std::span<const Vec3> x1_true, double t) {
  if (x1_pred.size() != x1_true.size()) fail(Errc::size_mismatch, "denoising_loss");
  if (x1_pred.empty()) return 0.0;
  const double tc = std::min(t, kTimeClamp);
  double mse = 0.0;
  for (std::size_t i = 0; i < x1_pred.size(); ++i) mse += norm2(x1_pred[i] - x1_true[i]);
  mse /= static_cast<double>(3 * x1_pred.size());
  const double w = 1.0 / ((1.0 - tc) * (1.0 - tc));
  return w * mse;
}

double discrete_ce_loss(const ad::Tensor& logits, std::span<const std::int32_t> x1_true,
                        std::span<const std::int32_t> x_t, int mask_token) {
  if (static_cast<std::size_t>(logits.rows()) != x1_true.size() || x1_true.size() != x_t.size())
    fail(Errc::size_mismatch, "discrete_ce_loss");
  int n_masked = 0;
  double loss = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (x_t[i] != mask_token) continue;
    ++n_masked;
    double mx = logits(i, 0);
    for (int c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits(i, c));
    double z = 0.0;
    for (int c = 0; c < logits.cols(); ++c) z += std::exp(logits(i, c) - mx);
    loss += (mx + std::log(z)) - logits(i, x1_true[i]);
  }
  return n_masked > 0 ? loss / n_masked : 0.0;
}

double multimodal_loss(const std::map<std::string, double>& per_modality_losses,
                       const LossWeights& weights) {
  double total = 0.0;
  for (const auto& [id, loss] : per_modality_losses) total += weights.at(id) * loss;
  return total;
}

std::vector<Vec3> euler_step_positions(std::span<const Vec3> x_t, std::span<const Vec3> x1_pred,
                                       double t, double dt) {
  if (x_t.size() != x1_pred.size()) fail(Errc::size_mismatch, "euler_step_positions");
  if (t >= 1.0) fail(Errc::past_terminal, "euler_step_positions at t >= 1");
  // The x1-parameterized conditional vector field for linear paths.
  const double factor = dt / (1.0 - t);
  std::vector<Vec3> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i)
    out[i] = x_t[i] + factor * (x1_pred[i] - x_t[i]);
  return out;
}

namespace {

std::int32_t draw_categorical_no_mask(const ad::Tensor& logits, int row, int mask_token,
                                      Rng& rng) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < logits.cols(); ++c)
    if (c != mask_token) mx = std::max(mx, logits(row, c));
  double z = 0.0;
  for (int c = 0; c < logits.cols(); ++c)
    if (c != mask_token) z += std::exp(logits(row, c) - mx);
  const double u = rng.uniform() * z;
  double acc = 0.0;
  for (int c = 0; c < logits.cols(); ++c) {
    if (c == mask_token) continue;
    acc += std::exp(logits(row, c) - mx);
    if (u < acc) return c;
  }
  for (int c = logits.cols() - 1; c >= 0; --c)
    if (c != mask_token) return c;
  return 0;
}

}  // namespace

std::vector<std::int32_t> ctmc_step_discrete(std::span<const std::int32_t> x_t,
                                             const ad::Tensor& logits, double t, double dt,
                                             const DiscretePathParams& params, Rng& rng) {
  if (static_cast<std::size_t>(logits.rows()) != x_t.size())
    fail(Errc::size_mismatch, "ctmc_step_discrete");
  if (t + dt > 1.0 + 1e-12) fail(Errc::past_terminal, "ctmc_step_discrete past t=1");
  const double denom = 1.0 - t;
  const double p_unmask =
      denom > 0.0 ? std::clamp(dt * (1.0 + params.eta * t) / denom, 0.0, 1.0) : 1.0;
  const bool final_step = t + dt >= 1.0 - 1e-12;
  const double p_remask = final_step ? 0.0 : std::clamp(dt * params.eta, 0.0, 1.0);

  std::vector<std::int32_t> out(x_t.begin(), x_t.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == params.mask_token) {
      if (rng.uniform() < p_unmask)
        out[i] = draw_categorical_no_mask(logits, static_cast<int>(i), params.mask_token, rng);
    } else if (params.eta > 0.0) {
      if (rng.uniform() < p_remask) out[i] = params.mask_token;
    }
  }
  return out;
}

PairIndex build_pair_index(const graph::EdgeSet& edges) {
  PairIndex idx;
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> where;
  for (std::size_t e = 0; e < edges.pairs.size(); ++e) {
    auto [s, d] = edges.pairs[e];
    const auto key = std::minmax(s, d);
    auto it = where.find({key.first, key.second});
    if (it == where.end()) {
      where.emplace(std::make_pair(key.first, key.second), idx.pairs.size());
      idx.pairs.emplace_back(key.first, key.second);
      idx.edge_slots.push_back({e});
    } else {
      idx.edge_slots[it->second].push_back(e);
    }
  }
  // std::map iteration already yields pairs in lexicographic order, but the
  // insertion order above follows the edge array; re-sort for a stable view.
  std::vector<std::size_t> order(idx.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return idx.pairs[a] < idx.pairs[b]; });
  PairIndex sorted;
  sorted.pairs.reserve(order.size());
  sorted.edge_slots.reserve(order.size());
  for (std::size_t i : order) {
    sorted.pairs.push_back(idx.pairs[i]);
    sorted.edge_slots.push_back(std::move(idx.edge_slots[i]));
  }
  return sorted;
}

namespace {

void require_contract(bool ok, const std::string& what) {
  if (!ok) fail(Errc::denoiser_contract, what);
}

}  // namespace

std::vector<graph::FlowState> sample_trajectory(const graph::TaskSpec& task,
                                                const graph::ModalityRegistry& registry,
                                                const graph::FlowState& init,
                                                const Denoiser& denoiser, int n_steps, Rng& rng,
                                                double eta) {
  std::vector<graph::FlowState> trajectory;
  trajectory.reserve(n_steps + 1);
  trajectory.push_back(init);
  trajectory.back().task = task;
  trajectory.back().t = 0.0;

  const double dt = 1.0 / n_steps;
  for (int step = 0; step < n_steps; ++step) {
    const double t = static_cast<double>(step) / n_steps;
    graph::FlowState next = trajectory.back();
    const DenoiserOutput out = denoiser(trajectory.back());

    // Generated modalities advance in (deterministic) set order; everything
    // else is left untouched.
    for (const std::string& id : task.generated) {
      const graph::ModalityDescriptor& desc = registry.at(id);
      if (!desc.is_discrete()) {
        auto pit = out.positions.find(id);
        require_contract(pit != out.positions.end(), "missing position output for " + id);
        auto nit = next.graph.nodes.find(desc.node_carrier());
        require_contract(nit != next.graph.nodes.end(), "no carrier node set for " + id);
        graph::NodeSet& set = nit->second;
        require_contract(static_cast<int>(pit->second.size()) == set.count,
                         "position output length for " + id);
        set.positions = euler_step_positions(set.positions, pit->second, t, dt);
      } else if (desc.on_nodes()) {
        auto lit = out.node_logits.find(id);
        require_contract(lit != out.node_logits.end(), "missing node logits for " + id);
        auto nit = next.graph.nodes.find(desc.node_carrier());
        require_contract(nit != next.graph.nodes.end(), "no carrier node set for " + id);
        auto tok = nit->second.tokens.find(id);
        require_contract(tok != nit->second.tokens.end(), "no token buffer for " + id);
        require_contract(lit->second.rows() == nit->second.count &&
                             lit->second.cols() == desc.vocab_size,
                         "node logits shape for " + id);
        DiscretePathParams params{desc.vocab_size, desc.mask_token(), eta};
        tok->second = ctmc_step_discrete(tok->second, lit->second, t, dt, params, rng);
      } else {
        auto lit = out.edge_logits.find(id);
        require_contract(lit != out.edge_logits.end(), "missing edge logits for " + id);
        auto eit = next.graph.edges.find(desc.edge_carrier());
        require_contract(eit != next.graph.edges.end(), "no carrier edge set for " + id);
        auto tok = eit->second.tokens.find(id);
        require_contract(tok != eit->second.tokens.end(), "no token buffer for " + id);
        const PairIndex idx = build_pair_index(eit->second);
        require_contract(lit->second.pairs == idx.pairs, "edge logits pair list for " + id);
        require_contract(lit->second.logits.rows() == static_cast<int>(idx.pairs.size()) &&
                             lit->second.logits.cols() == desc.vocab_size,
                         "edge logits shape for " + id);
        // CTMC state lives on unordered pairs; mirror the result into every
        // directed slot so the edge arrays stay symmetric.
        std::vector<std::int32_t> pair_state(idx.pairs.size());
        for (std::size_t p = 0; p < idx.pairs.size(); ++p)
          pair_state[p] = tok->second[idx.edge_slots[p].front()];
        DiscretePathParams params{desc.vocab_size, desc.mask_token(), eta};
        pair_state = ctmc_step_discrete(pair_state, lit->second.logits, t, dt, params, rng);
        for (std::size_t p = 0; p < idx.pairs.size(); ++p)
          for (std::size_t slot : idx.edge_slots[p]) tok->second[slot] = pair_state[p];
      }
    }

    next.t = static_cast<double>(step + 1) / n_steps;
    trajectory.push_back(std::move(next));
  }
  return trajectory;
}

}  // namespace ligflow::flow
