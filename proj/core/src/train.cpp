#include "ligflow/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json_convert.hpp"

namespace ligflow::train {

namespace mod = graph::modality;

const TaskDataset& sample_task(std::span<const TaskDataset> datasets, Rng& rng) {
  if (datasets.empty()) fail(Errc::invalid_input, "empty task mixture");
  double total = 0.0;
  for (const TaskDataset& d : datasets) total += d.weight;
  if (total <= 0.0) fail(Errc::invalid_input, "task mixture weights sum to zero");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (const TaskDataset& d : datasets) {
    acc += d.weight;
    if (u < acc && d.weight > 0.0) return d;
  }
  for (auto it = datasets.rbegin(); it != datasets.rend(); ++it)
    if (it->weight > 0.0) return *it;
  fail(Errc::invalid_input, "task mixture has no positive weight");
}

void adam_step(ad::ParamStore& params, const ad::GradMap& grads, AdamState& state,
               const TrainConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (auto& [name, tensor] : params.items()) {
    ad::Tensor& m = state.m.try_emplace(name, tensor.rows(), tensor.cols()).first->second;
    ad::Tensor& v = state.v.try_emplace(name, tensor.rows(), tensor.cols()).first->second;
    const ad::Tensor* g = nullptr;
    if (auto it = grads.find(name); it != grads.end()) g = &it->second;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double gi = g != nullptr ? g->raw()[i] : 0.0;
      m.raw()[i] = cfg.beta1 * m.raw()[i] + (1.0 - cfg.beta1) * gi;
      v.raw()[i] = cfg.beta2 * v.raw()[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m.raw()[i] / bc1;
      const double vhat = v.raw()[i] / bc2;
      tensor.raw()[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double grad_global_norm(const ad::GradMap& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g.raw()) sq += v * v;
  return std::sqrt(sq);
}

void clip_gradients(ad::GradMap& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double nrm = grad_global_norm(grads);
  if (nrm <= max_norm || nrm == 0.0) return;
  const double scale = max_norm / nrm;
  for (auto& [name, g] : grads)
    for (double& v : g.raw()) v *= scale;
}

namespace {

ad::Tensor positions_tensor(std::span<const Vec3> pos) {
  ad::Tensor t(static_cast<int>(pos.size()) * 3, 1);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    t(static_cast<int>(3 * i), 0) = pos[i].x;
    t(static_cast<int>(3 * i + 1), 0) = pos[i].y;
    t(static_cast<int>(3 * i + 2), 0) = pos[i].z;
  }
  return t;
}

// Builds the noisy training state for one example and records the targets
// needed to assemble the losses afterwards.
struct PreparedExample {
  graph::FlowState state;
  double t = 0.0;
  std::map<std::string, std::vector<Vec3>> pos_targets;
  std::map<std::string, std::vector<std::int32_t>> node_targets;   // x1 tokens
  std::map<std::string, std::vector<std::int32_t>> node_xt;        // interpolated tokens
  std::map<std::string, std::vector<std::int32_t>> pair_targets;   // unordered-pair x1
  std::map<std::string, std::vector<std::int32_t>> pair_xt;
};

PreparedExample prepare_example(const TrainExample& example, const graph::TaskSpec& task,
                                const graph::ModalityRegistry& registry, const TrainConfig& cfg,
                                Rng& rng) {
  PreparedExample prep;
  prep.t = rng.uniform(0.0, cfg.t_max);
  prep.state.t = prep.t;
  prep.state.task = task;
  prep.state.graph = example.data;

  for (const std::string& id : task.generated) {
    const graph::ModalityDescriptor& desc = registry.at(id);
    const graph::GeneratedAssignment& assign = task.assignments.at(id);
    if (!desc.is_discrete()) {
      graph::NodeSet& set = prep.state.graph.nodes.at(desc.node_carrier());
      const std::vector<Vec3> x1 = set.positions;
      prep.pos_targets[id] = x1;
      flow::GaussianPrior prior{centroid(x1), 2.573};
      std::vector<Vec3> x0 = flow::sample_position_prior(set.count, prior, rng);
      if (assign.coupling == "permutation") {
        const std::vector<int> perm = flow::permutation_coupling(x0, x1);
        std::vector<Vec3> coupled(x0.size());
        for (std::size_t i = 0; i < x0.size(); ++i) coupled[i] = x0[perm[i]];
        x0 = std::move(coupled);
      }
      set.positions = flow::interpolate_positions(x0, x1, prep.t, cfg.path, rng);
    } else if (desc.on_nodes()) {
      graph::NodeSet& set = prep.state.graph.nodes.at(desc.node_carrier());
      std::vector<std::int32_t>& tokens = set.tokens.at(id);
      prep.node_targets[id] = tokens;
      flow::DiscretePathParams params{desc.vocab_size, desc.mask_token(), 0.0};
      tokens = flow::mask_interpolate_discrete(tokens, prep.t, params, rng);
      prep.node_xt[id] = tokens;
    } else {
      graph::EdgeSet& set = prep.state.graph.edges.at(desc.edge_carrier());
      std::vector<std::int32_t>& tokens = set.tokens.at(id);
      const flow::PairIndex idx = flow::build_pair_index(set);
      std::vector<std::int32_t> pair_x1(idx.pairs.size());
      for (std::size_t p = 0; p < idx.pairs.size(); ++p)
        pair_x1[p] = tokens[idx.edge_slots[p].front()];
      prep.pair_targets[id] = pair_x1;
      flow::DiscretePathParams params{desc.vocab_size, desc.mask_token(), 0.0};
      const std::vector<std::int32_t> pair_xt =
          flow::mask_interpolate_discrete(pair_x1, prep.t, params, rng);
      prep.pair_xt[id] = pair_xt;
      for (std::size_t p = 0; p < idx.pairs.size(); ++p)
        for (std::size_t slot : idx.edge_slots[p]) tokens[slot] = pair_xt[p];
    }
  }
  assemble::rebuild_cross_edges(prep.state.graph, cfg.graph);
  return prep;
}

}  // namespace

StepResult training_step(std::span<const TrainExample> batch, const graph::TaskSpec& task,
                         net::NetworkParams& params, AdamState& opt, const TrainConfig& cfg,
                         Rng& rng) {
  if (batch.empty()) fail(Errc::invalid_input, "empty batch");
  const graph::ModalityRegistry& registry = params.registry;

  ad::Tape tape;
  std::vector<ad::ValueId> example_losses;
  StepResult result;

  for (const TrainExample& example : batch) {
    const PreparedExample prep = prepare_example(example, task, registry, cfg, rng);
    const net::ForwardIds ids = net::forward_on_tape(tape, params, prep.state);

    std::vector<ad::ValueId> weighted;
    for (const std::string& id : task.generated) {
      const graph::ModalityDescriptor& desc = registry.at(id);
      ad::ValueId loss_id = -1;
      if (!desc.is_discrete()) {
        const ad::ValueId pred = ids.positions.at(id);
        const ad::ValueId target = tape.constant(positions_tensor(prep.pos_targets.at(id)));
        const ad::ValueId diff = tape.sub(pred, target);
        const double tc = std::min(prep.t, flow::kTimeClamp);
        const double w = 1.0 / ((1.0 - tc) * (1.0 - tc));
        loss_id = tape.scale(tape.mean_all(tape.mul(diff, diff)), w);
      } else if (desc.on_nodes()) {
        const std::vector<std::int32_t>& xt = prep.node_xt.at(id);
        std::vector<std::uint8_t> masked(xt.size());
        for (std::size_t i = 0; i < xt.size(); ++i) masked[i] = xt[i] == desc.mask_token();
        loss_id = tape.ce_masked(ids.node_logits.at(id), prep.node_targets.at(id), masked);
      } else {
        const std::vector<std::int32_t>& xt = prep.pair_xt.at(id);
        std::vector<std::uint8_t> masked(xt.size());
        for (std::size_t i = 0; i < xt.size(); ++i) masked[i] = xt[i] == desc.mask_token();
        loss_id = tape.ce_masked(ids.edge_logits.at(id).logits, prep.pair_targets.at(id), masked);
      }
      result.per_modality[id] += tape.value(loss_id).item();
      weighted.push_back(tape.scale(loss_id, cfg.loss_weights.at(id)));
    }
    ad::ValueId total = weighted.front();
    for (std::size_t i = 1; i < weighted.size(); ++i) total = tape.add(total, weighted[i]);
    example_losses.push_back(total);
  }

  ad::ValueId batch_loss = example_losses.front();
  for (std::size_t i = 1; i < example_losses.size(); ++i)
    batch_loss = tape.add(batch_loss, example_losses[i]);
  batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(example_losses.size()));

  result.total = tape.value(batch_loss).item();
  for (auto& [id, v] : result.per_modality) v /= static_cast<double>(batch.size());
  if (!std::isfinite(result.total))
    fail(Errc::non_finite_loss, "training step produced " + std::to_string(result.total));

  ad::GradMap grads = tape.backward(batch_loss);
  clip_gradients(grads, cfg.grad_clip);
  adam_step(params.store, grads, opt, cfg);
  return result;
}

TrainResult run_training(const TrainConfig& cfg, const graph::ModalityRegistry& registry,
                         std::span<const TaskDataset> datasets,
                         const net::NetworkParams* init_from,
                         const std::function<void(const TrainLogEntry&)>& on_step) {
  std::vector<graph::TaskSpec> tasks;
  for (const TaskDataset& d : datasets) tasks.push_back(d.task);

  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng step_rng = root.split(1);

  TrainResult result;
  if (init_from != nullptr) {
    if (init_from->registry.size() != registry.size())
      fail(Errc::registry_mismatch, "fine-tune registry differs from checkpoint");
    for (int i = 0; i < registry.size(); ++i) {
      const auto& a = registry.at(i);
      const auto& b = init_from->registry.at(i);
      if (a.id != b.id || a.kind != b.kind || a.vocab_size != b.vocab_size || a.dim != b.dim)
        fail(Errc::registry_mismatch, "fine-tune registry differs at " + a.id);
    }
    result.params = *init_from;
  } else {
    result.params = net::init_params(cfg.net, registry, tasks, init_rng);
  }

  for (int step = 0; step < cfg.steps; ++step) {
    const TaskDataset& dataset = sample_task(datasets, step_rng);
    std::span<const TrainExample> pool(dataset.examples);
    std::vector<TrainExample> batch;
    if (static_cast<int>(pool.size()) <= cfg.batch_size) {
      batch.assign(pool.begin(), pool.end());
    } else {
      std::vector<std::size_t> order(pool.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (int i = 0; i < cfg.batch_size; ++i) {
        const std::size_t j = i + step_rng.uniform_int(order.size() - i);
        std::swap(order[i], order[j]);
        batch.push_back(pool[order[i]]);
      }
    }

    TrainLogEntry entry;
    entry.step = step;
    entry.task = dataset.task.name;
    try {
      const StepResult r =
          training_step(batch, dataset.task, result.params, result.opt, cfg, step_rng);
      entry.total = r.total;
      entry.per_modality = r.per_modality;
    } catch (const Error& e) {
      if (e.code() != Errc::non_finite_loss) throw;
      ++result.aborted_steps;
      entry.total = std::numeric_limits<double>::quiet_NaN();
    }
    if (on_step) on_step(entry);
    result.history.push_back(std::move(entry));
  }
  return result;
}

TrainResult pretrain_then_finetune(const TrainConfig& pre_cfg,
                                   std::span<const TaskDataset> pre_data,
                                   const TrainConfig& fine_cfg,
                                   std::span<const TaskDataset> fine_data,
                                   const graph::ModalityRegistry& registry) {
  TrainResult pre = run_training(pre_cfg, registry, pre_data);
  if (fine_cfg.steps == 0) return pre;
  return run_training(fine_cfg, registry, fine_data, &pre.params);
}

namespace {

void append_tensor(std::string& out, const ad::Tensor& t) {
  static_assert(sizeof(double) == 8);
  const std::size_t bytes = t.size() * sizeof(double);
  const std::size_t at = out.size();
  out.resize(at + bytes);
  std::memcpy(out.data() + at, t.data(), bytes);
}

void read_tensor(const std::string& blob, std::size_t& offset, ad::Tensor& t) {
  const std::size_t bytes = t.size() * sizeof(double);
  if (offset + bytes > blob.size()) fail(Errc::corrupt_checkpoint, "tensor data truncated");
  std::memcpy(t.data(), blob.data() + offset, bytes);
  offset += bytes;
}

}  // namespace

void save_checkpoint(const net::NetworkParams& params, const AdamState* opt,
                     const std::filesystem::path& path, const std::string& extra_json) {
  io::json header;
  header["version"] = 1;
  header["config_hash"] = params.config_hash();
  header["net"] = io::net_config_json(params.cfg);
  header["registry"] = io::registry_json(params.registry);
  io::json tasks = io::json::array();
  for (const graph::TaskSpec& t : params.tasks) tasks.push_back(io::task_json(t));
  header["tasks"] = std::move(tasks);
  io::json tensors = io::json::array();
  for (const auto& [name, t] : params.store.items())
    tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  header["tensors"] = std::move(tensors);
  header["opt_step"] = opt != nullptr ? opt->step : -1;
  if (!extra_json.empty()) {
    io::json extra = io::json::parse(extra_json, nullptr, false);
    if (extra.is_discarded()) fail(Errc::invalid_input, "extra payload is not JSON");
    header["extra"] = std::move(extra);
  }

  std::string out = header.dump();
  out += '\n';
  for (const auto& [name, t] : params.store.items()) append_tensor(out, t);
  if (opt != nullptr) {
    for (const auto& [name, t] : params.store.items()) append_tensor(out, opt->m.at(name));
    for (const auto& [name, t] : params.store.items()) append_tensor(out, opt->v.at(name));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(Errc::io_error, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string blob = ss.str();

  const std::size_t nl = blob.find('\n');
  if (nl == std::string::npos) fail(Errc::corrupt_checkpoint, "missing header terminator");
  io::json header = io::json::parse(blob.substr(0, nl), nullptr, false);
  if (header.is_discarded()) fail(Errc::corrupt_checkpoint, "malformed header");

  Checkpoint ckpt;
  try {
    ckpt.params.cfg = io::net_config_from(header.at("net"));
    ckpt.params.registry = io::registry_from(header.at("registry"));
    for (const io::json& jt : header.at("tasks"))
      ckpt.params.tasks.push_back(io::task_from(jt));
    Rng dummy(0);
    net::NetworkParams shape_check =
        net::init_params(ckpt.params.cfg, ckpt.params.registry, ckpt.params.tasks, dummy);
    const io::json& tensors = header.at("tensors");
    if (tensors.size() != shape_check.store.size())
      fail(Errc::corrupt_checkpoint, "tensor count mismatch");
    std::size_t offset = nl + 1;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const std::string name = tensors[i].at("name").get<std::string>();
      const int rows = tensors[i].at("rows").get<int>();
      const int cols = tensors[i].at("cols").get<int>();
      const ad::Tensor& expect = shape_check.store.items()[i].second;
      if (shape_check.store.items()[i].first != name || expect.rows() != rows ||
          expect.cols() != cols)
        fail(Errc::corrupt_checkpoint, "tensor layout mismatch at " + name);
      ad::Tensor t(rows, cols);
      read_tensor(blob, offset, t);
      ckpt.params.store.add(name, std::move(t));
    }
    const int opt_step = header.at("opt_step").get<int>();
    if (opt_step >= 0) {
      AdamState opt;
      opt.step = opt_step;
      for (const auto& [name, t] : ckpt.params.store.items()) {
        ad::Tensor m(t.rows(), t.cols());
        read_tensor(blob, offset, m);
        opt.m.emplace(name, std::move(m));
      }
      for (const auto& [name, t] : ckpt.params.store.items()) {
        ad::Tensor v(t.rows(), t.cols());
        read_tensor(blob, offset, v);
        opt.v.emplace(name, std::move(v));
      }
      ckpt.opt = std::move(opt);
    }
    if (header.contains("extra")) ckpt.extra_json = header.at("extra").dump();
    const std::uint64_t stored_hash = header.at("config_hash").get<std::uint64_t>();
    if (stored_hash != ckpt.params.config_hash())
      fail(Errc::registry_mismatch, "config hash mismatch");
  } catch (const io::json::exception& e) {
    fail(Errc::corrupt_checkpoint, e.what());
  }
  return ckpt;
}

void write_metrics_csv(std::span<const TrainLogEntry> history,
                       const std::filesystem::path& path) {
  std::set<std::string> mods;
  for (const TrainLogEntry& e : history)
    for (const auto& [id, v] : e.per_modality) mods.insert(id);
  std::ostringstream out;
  out << "step,task";
  for (const std::string& id : mods) out << ",loss_" << id;
  out << ",total\n";
  for (const TrainLogEntry& e : history) {
    out << e.step << "," << e.task;
    for (const std::string& id : mods) {
      out << ",";
      if (auto it = e.per_modality.find(id); it != e.per_modality.end()) out << it->second;
    }
    out << "," << e.total << "\n";
  }
  std::ofstream f(path);
  if (!f) fail(Errc::io_error, "cannot write " + path.string());
  f << out.str();
}

}  // namespace ligflow::train
