#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ligflow/assemble.hpp"
#include "ligflow/flow.hpp"
#include "ligflow/hetgraph.hpp"
#include "ligflow/net.hpp"
#include "ligflow/rng.hpp"

namespace ligflow::train {

struct TrainConfig {
  int batch_size = 4;
  int steps = 1000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 1.0;  // global-norm clip; <= 0 disables
  double t_max = 0.999;    // training time drawn uniform on [0, t_max]
  std::uint64_t seed = 0;
  int checkpoint_interval = 0;  // 0 = final checkpoint only
  flow::ContinuousPathParams path;
  flow::LossWeights loss_weights;
  net::NetConfig net;
  assemble::GraphConfig graph;
};

// One preprocessed example: a graph holding the task's present modalities at
// their data values.
struct TrainExample {
  graph::HeteroGraph data;
};

struct TaskDataset {
  graph::TaskSpec task;
  double weight = 1.0;
  std::vector<TrainExample> examples;
};

// Categorical draw over mixture weights; weight-0 entries are never drawn.
const TaskDataset& sample_task(std::span<const TaskDataset> datasets, Rng& rng);

struct AdamState {
  int step = 0;
  std::map<std::string, ad::Tensor> m;
  std::map<std::string, ad::Tensor> v;
};

// Textbook Adam with bias correction; gradients absent from `grads` are
// treated as zero.
void adam_step(ad::ParamStore& params, const ad::GradMap& grads, AdamState& state,
               const TrainConfig& cfg);

double grad_global_norm(const ad::GradMap& grads);
void clip_gradients(ad::GradMap& grads, double max_norm);

struct StepResult {
  double total = 0.0;
  std::map<std::string, double> per_modality;
};

// One optimization step on a batch of same-task examples: interpolants at a
// shared per-example t, forward, weighted losses, backward, clip, Adam.
// Throws NonFiniteLoss (params untouched) when the loss is not finite.
StepResult training_step(std::span<const TrainExample> batch, const graph::TaskSpec& task,
                         net::NetworkParams& params, AdamState& opt, const TrainConfig& cfg,
                         Rng& rng);

struct TrainLogEntry {
  int step = 0;
  std::string task;
  double total = 0.0;
  std::map<std::string, double> per_modality;
};

struct TrainResult {
  net::NetworkParams params;
  AdamState opt;
  std::vector<TrainLogEntry> history;
  int aborted_steps = 0;
};

TrainResult run_training(const TrainConfig& cfg, const graph::ModalityRegistry& registry,
                         std::span<const TaskDataset> datasets,
                         const net::NetworkParams* init_from = nullptr,
                         const std::function<void(const TrainLogEntry&)>& on_step = {});

// Two-phase training; fine-tuning initializes from the pretraining result and
// requires an identical registry (RegistryMismatch otherwise).
TrainResult pretrain_then_finetune(const TrainConfig& pre_cfg,
                                   std::span<const TaskDataset> pre_data,
                                   const TrainConfig& fine_cfg,
                                   std::span<const TaskDataset> fine_data,
                                   const graph::ModalityRegistry& registry);

// Checkpoint: JSON header (shapes, config hash, registry, tasks, optional
// extra payload) followed by the little-endian 64-bit tensors in declaration
// order; optimizer moments appended when present.
void save_checkpoint(const net::NetworkParams& params, const AdamState* opt,
                     const std::filesystem::path& path, const std::string& extra_json = "");

struct Checkpoint {
  net::NetworkParams params;
  std::optional<AdamState> opt;
  std::string extra_json;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_metrics_csv(std::span<const TrainLogEntry> history, const std::filesystem::path& path);

}  // namespace ligflow::train
