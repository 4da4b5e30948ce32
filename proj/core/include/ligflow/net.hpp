#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ligflow/autodiff.hpp"
#include "ligflow/flow.hpp"
#include "ligflow/hetgraph.hpp"
#include "ligflow/rng.hpp"

namespace ligflow::net {

struct RbfConfig {
  int n_bases = 16;
  double r_max = 10.0;
};

// Gaussian basis values exp(-(d - mu_k)^2 / 2w^2) with centers linearly
// spaced on [0, r_max] and width equal to the center spacing.
std::vector<double> rbf_embed(double d, const RbfConfig& cfg);

struct NetConfig {
  int d_s = 256;
  int d_v = 16;
  int d_e = 64;
  int n_blocks = 4;
  int convs_per_block = 2;
  int time_dim = 16;
  int task_dim = 16;
  int type_emb_dim = 64;
  int residue_pe_dim = 16;
  RbfConfig rbf;
};

// One geometric vector perceptron: scalar path mixes scalars with the norms
// of linearly mixed vectors, the vector path is a linear mix gated by a
// learned sigmoid of the scalar pre-activation.
struct GvpSpec {
  int s_in = 0, v_in = 0;
  int s_out = 0, v_out = 0;
  int v_hidden = 0;  // defaults to max(v_in, v_out) when 0
  bool scalar_activation = true;

  int hidden() const { return v_hidden > 0 ? v_hidden : std::max(v_in, v_out); }
};

struct GvpIds {
  ad::ValueId s = -1;
  ad::ValueId v = -1;  // [3k, d_v] vector-block tensor, -1 when v_out == 0
};

void declare_gvp(ad::ParamStore& store, const std::string& prefix, const GvpSpec& spec, Rng& rng,
                 bool zero_vector_out = false);
GvpIds apply_gvp(ad::Tape& tape, const ad::ParamStore& store, const std::string& prefix,
                 const GvpSpec& spec, GvpIds in);

void declare_mlp(ad::ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                 Rng& rng);
ad::ValueId apply_mlp(ad::Tape& tape, const ad::ParamStore& store, const std::string& prefix,
                      ad::ValueId x);

// All weights of the denoiser for one instantiation (a registry plus the
// ordered set of tasks it supports).
struct NetworkParams {
  NetConfig cfg;
  graph::ModalityRegistry registry;
  std::vector<graph::TaskSpec> tasks;
  ad::ParamStore store;

  int task_index(std::string_view name) const;
  const graph::TaskSpec& task(std::string_view name) const;
  std::uint64_t config_hash() const;
};

NetworkParams init_params(const NetConfig& cfg, const graph::ModalityRegistry& registry,
                          std::span<const graph::TaskSpec> tasks, Rng& rng);

// Tape handles for the generated modalities of the state's task.
struct ForwardIds {
  std::map<std::string, ad::ValueId> positions;  // [3n, 1]
  std::map<std::string, ad::ValueId> node_logits;
  struct EdgeLogits {
    std::vector<std::pair<std::int32_t, std::int32_t>> pairs;  // unordered, i < j
    ad::ValueId logits = -1;
  };
  std::map<std::string, EdgeLogits> edge_logits;
};

ForwardIds forward_on_tape(ad::Tape& tape, const NetworkParams& params,
                           const graph::FlowState& state);

flow::DenoiserOutput forward(const NetworkParams& params, const graph::FlowState& state);

// Sinusoidal embedding used for the time input (t is mapped to [0, 1000]).
std::vector<double> time_embedding(double t, int dim);

}  // namespace ligflow::net
