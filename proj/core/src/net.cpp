#include "ligflow/net.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ligflow::net {

namespace mod = graph::modality;
using graph::EdgeType;
using graph::NodeType;

std::vector<double> rbf_embed(double d, const RbfConfig& cfg) {
  std::vector<double> out(cfg.n_bases);
  const double w = cfg.n_bases > 1 ? cfg.r_max / (cfg.n_bases - 1) : cfg.r_max;
  for (int k = 0; k < cfg.n_bases; ++k) {
    const double mu = cfg.n_bases > 1 ? k * w : 0.0;
    out[k] = std::exp(-(d - mu) * (d - mu) / (2.0 * w * w));
  }
  return out;
}

std::vector<double> time_embedding(double t, int dim) {
  std::vector<double> out(dim);
  const double pos = 1000.0 * t;
  for (int k = 0; k < dim / 2; ++k) {
    const double freq = std::pow(10000.0, -2.0 * k / dim);
    out[2 * k] = std::sin(pos * freq);
    out[2 * k + 1] = std::cos(pos * freq);
  }
  return out;
}

namespace {

double kaiming_limit(int fan_in) { return std::sqrt(3.0 / std::max(fan_in, 1)); }

ad::Tensor uniform_init(int rows, int cols, int fan_in, Rng& rng) {
  ad::Tensor t(rows, cols);
  const double lim = kaiming_limit(fan_in);
  for (double& v : t.raw()) v = rng.uniform(-lim, lim);
  return t;
}

// Expand entity indices to the three rows of their vector blocks.
std::vector<std::int32_t> expand3(std::span<const std::int32_t> idx) {
  std::vector<std::int32_t> out;
  out.reserve(idx.size() * 3);
  for (std::int32_t i : idx) {
    out.push_back(3 * i);
    out.push_back(3 * i + 1);
    out.push_back(3 * i + 2);
  }
  return out;
}

const std::array<EdgeType, 9> kEdgeOrder = {{
    {NodeType::Ligand, NodeType::Ligand},
    {NodeType::Ligand, NodeType::Protein},
    {NodeType::Protein, NodeType::Ligand},
    {NodeType::Protein, NodeType::Protein},
    {NodeType::Ligand, NodeType::Pharmacophore},
    {NodeType::Pharmacophore, NodeType::Ligand},
    {NodeType::Ligand, NodeType::Npnde},
    {NodeType::Npnde, NodeType::Ligand},
    {NodeType::Npnde, NodeType::Npnde},
}};

struct Plan {
  std::vector<NodeType> node_types;   // present in at least one task
  std::vector<EdgeType> edge_types;   // canonical order, endpoints present
  std::vector<std::string> generated_discrete;   // heads
  std::vector<NodeType> pos_generated;           // position-update targets
};

Plan build_plan(const graph::ModalityRegistry& reg, std::span<const graph::TaskSpec> tasks) {
  Plan plan;
  for (NodeType nt : graph::kNodeTypes) {
    const bool present = std::ranges::any_of(
        tasks, [&](const graph::TaskSpec& t) { return t.node_type_present(nt, reg); });
    if (present) plan.node_types.push_back(nt);
  }
  auto has_node = [&](NodeType nt) {
    return std::ranges::find(plan.node_types, nt) != plan.node_types.end();
  };
  for (const EdgeType& et : kEdgeOrder)
    if (has_node(et.src) && has_node(et.dst)) plan.edge_types.push_back(et);

  for (const graph::ModalityDescriptor& m : reg.descriptors()) {
    const bool generated = std::ranges::any_of(
        tasks, [&](const graph::TaskSpec& t) { return t.generated.count(m.id) > 0; });
    if (!generated) continue;
    if (m.is_discrete()) {
      plan.generated_discrete.push_back(m.id);
    } else if (m.on_nodes()) {
      plan.pos_generated.push_back(m.node_carrier());
    }
  }
  return plan;
}

std::string node_key(NodeType t) { return std::string(graph::to_string(t)); }
std::string edge_key(EdgeType t) { return graph::to_string(t); }

GvpSpec msg_spec(const NetConfig& cfg, bool featured, int stage) {
  GvpSpec s;
  if (stage == 0) {
    s.s_in = 2 * cfg.d_s + (featured ? cfg.d_e : 0) + cfg.rbf.n_bases;
    s.v_in = cfg.d_v + 1;
  } else {
    s.s_in = cfg.d_s;
    s.v_in = cfg.d_v;
  }
  s.s_out = cfg.d_s;
  s.v_out = cfg.d_v;
  s.scalar_activation = stage < 2;  // last GVP in the chain is linear
  return s;
}

GvpSpec upd_spec(const NetConfig& cfg, int stage) {
  GvpSpec s;
  s.s_in = stage == 0 ? 2 * cfg.d_s : cfg.d_s;
  s.v_in = stage == 0 ? 2 * cfg.d_v : cfg.d_v;
  s.s_out = cfg.d_s;
  s.v_out = cfg.d_v;
  s.scalar_activation = stage < 1;
  return s;
}

GvpSpec pos_spec(const NetConfig& cfg) {
  GvpSpec s;
  s.s_in = cfg.d_s;
  s.v_in = cfg.d_v;
  s.s_out = cfg.d_s;
  s.v_out = 1;
  s.scalar_activation = false;
  return s;
}

int embed_input_width(const NetConfig& cfg, const graph::ModalityRegistry& reg, NodeType nt) {
  int width = static_cast<int>(reg.node_discrete(nt).size()) * cfg.type_emb_dim;
  if (nt == NodeType::Protein) width += cfg.residue_pe_dim;
  width += cfg.time_dim + cfg.task_dim;
  return width;
}

}  // namespace

void declare_gvp(ad::ParamStore& store, const std::string& prefix, const GvpSpec& spec, Rng& rng,
                 bool zero_vector_out) {
  const int h = spec.hidden();
  if (spec.v_in > 0) store.add(prefix + "/w_h", uniform_init(spec.v_in, h, spec.v_in, rng));
  const int s_cat = spec.s_in + (spec.v_in > 0 ? h : 0);
  store.add(prefix + "/w_s", uniform_init(s_cat, spec.s_out, s_cat, rng));
  store.add(prefix + "/b_s", ad::Tensor(1, spec.s_out));
  if (spec.v_out > 0) {
    store.add(prefix + "/w_mu",
              zero_vector_out ? ad::Tensor(h, spec.v_out) : uniform_init(h, spec.v_out, h, rng));
    store.add(prefix + "/w_g", uniform_init(spec.s_out, spec.v_out, spec.s_out, rng));
    store.add(prefix + "/b_g", ad::Tensor(1, spec.v_out));
  }
}

GvpIds apply_gvp(ad::Tape& tape, const ad::ParamStore& store, const std::string& prefix,
                 const GvpSpec& spec, GvpIds in) {
  GvpIds out;
  ad::ValueId s_cat = in.s;
  ad::ValueId v_h = -1;
  if (spec.v_in > 0) {
    v_h = tape.matmul(in.v, tape.param(store, prefix + "/w_h"));
    s_cat = tape.concat_cols({in.s, tape.vnorm(v_h)});
  }
  const ad::ValueId s_lin = tape.add_rowvec(tape.matmul(s_cat, tape.param(store, prefix + "/w_s")),
                                            tape.param(store, prefix + "/b_s"));
  out.s = spec.scalar_activation ? tape.silu(s_lin) : s_lin;
  if (spec.v_out > 0) {
    const ad::ValueId v_mu = tape.matmul(v_h, tape.param(store, prefix + "/w_mu"));
    const ad::ValueId gate = tape.sigmoid(
        tape.add_rowvec(tape.matmul(s_lin, tape.param(store, prefix + "/w_g")),
                        tape.param(store, prefix + "/b_g")));
    out.v = tape.vgate(v_mu, gate);
  }
  return out;
}

void declare_mlp(ad::ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                 Rng& rng) {
  store.add(prefix + "/w1", uniform_init(in, hidden, in, rng));
  store.add(prefix + "/b1", ad::Tensor(1, hidden));
  store.add(prefix + "/w2", uniform_init(hidden, out, hidden, rng));
  store.add(prefix + "/b2", ad::Tensor(1, out));
}

ad::ValueId apply_mlp(ad::Tape& tape, const ad::ParamStore& store, const std::string& prefix,
                      ad::ValueId x) {
  const ad::ValueId h = tape.silu(tape.add_rowvec(
      tape.matmul(x, tape.param(store, prefix + "/w1")), tape.param(store, prefix + "/b1")));
  return tape.add_rowvec(tape.matmul(h, tape.param(store, prefix + "/w2")),
                         tape.param(store, prefix + "/b2"));
}

int NetworkParams::task_index(std::string_view name) const {
  for (int i = 0; i < static_cast<int>(tasks.size()); ++i)
    if (tasks[i].name == name) return i;
  fail(Errc::unknown_task, std::string(name));
}

const graph::TaskSpec& NetworkParams::task(std::string_view name) const {
  return tasks[task_index(name)];
}

std::uint64_t NetworkParams::config_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  auto mix_str = [&](std::string_view s) {
    for (char c : s) mix(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    mix(0xff);
  };
  mix(cfg.d_s); mix(cfg.d_v); mix(cfg.d_e); mix(cfg.n_blocks); mix(cfg.convs_per_block);
  mix(cfg.time_dim); mix(cfg.task_dim); mix(cfg.type_emb_dim); mix(cfg.residue_pe_dim);
  mix(cfg.rbf.n_bases);
  mix(static_cast<std::uint64_t>(cfg.rbf.r_max * 4096));
  for (const graph::ModalityDescriptor& m : registry.descriptors()) {
    mix_str(m.id);
    mix(static_cast<std::uint64_t>(m.kind));
    mix(m.is_discrete() ? m.vocab_size : m.dim);
  }
  for (const graph::TaskSpec& t : tasks) {
    mix_str(t.name);
    for (const std::string& id : t.generated) mix_str(id);
    for (const std::string& id : t.conditioning) mix_str(id);
  }
  return h;
}

NetworkParams init_params(const NetConfig& cfg, const graph::ModalityRegistry& registry,
                          std::span<const graph::TaskSpec> tasks, Rng& rng) {
  NetworkParams params;
  params.cfg = cfg;
  params.registry = registry;
  params.tasks.assign(tasks.begin(), tasks.end());
  ad::ParamStore& store = params.store;

  const Plan plan = build_plan(registry, tasks);

  store.add("task_table",
            uniform_init(static_cast<int>(tasks.size()), cfg.task_dim, cfg.task_dim, rng));

  for (NodeType nt : plan.node_types) {
    const std::string key = node_key(nt);
    for (const graph::ModalityDescriptor* m : registry.node_discrete(nt))
      store.add("emb/" + key + "/" + m->id,
                uniform_init(m->vocab_size, cfg.type_emb_dim, cfg.type_emb_dim, rng));
    declare_mlp(store, "emb/" + key + "/mlp", embed_input_width(cfg, registry, nt), cfg.d_s,
                cfg.d_s, rng);
  }

  for (const EdgeType& et : plan.edge_types) {
    for (const graph::ModalityDescriptor* m : registry.edge_discrete(et))
      store.add("emb/" + edge_key(et) + "/" + m->id,
                uniform_init(m->vocab_size, cfg.d_e, cfg.d_e, rng));
  }

  // Message chains (3 GVPs) per edge type and update chains (2 GVPs) per node
  // type are shared across all convolutions.
  for (const EdgeType& et : plan.edge_types) {
    const bool featured = !registry.edge_discrete(et).empty();
    for (int g = 0; g < 3; ++g)
      declare_gvp(store, "msg/" + edge_key(et) + "/gvp" + std::to_string(g),
                  msg_spec(cfg, featured, g), rng);
  }
  for (NodeType nt : plan.node_types)
    for (int g = 0; g < 2; ++g)
      declare_gvp(store, "upd/" + node_key(nt) + "/gvp" + std::to_string(g), upd_spec(cfg, g),
                  rng);

  // Per-block position updates (zero-initialized vector output keeps the
  // untrained network position-identical) and edge-feature updates.
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const std::string bk = "block" + std::to_string(b);
    for (NodeType nt : plan.pos_generated)
      declare_gvp(store, bk + "/pos/" + node_key(nt), pos_spec(cfg), rng,
                  /*zero_vector_out=*/true);
    for (const EdgeType& et : plan.edge_types) {
      if (registry.edge_discrete(et).empty()) continue;
      declare_mlp(store, bk + "/edge/" + edge_key(et),
                  cfg.d_e + 2 * cfg.d_s + cfg.rbf.n_bases, cfg.d_e, cfg.d_e, rng);
    }
  }

  for (const std::string& id : plan.generated_discrete) {
    const graph::ModalityDescriptor& m = registry.at(id);
    const int in = m.on_nodes() ? cfg.d_s : cfg.d_e;
    declare_mlp(store, "head/" + id, in, in, m.vocab_size, rng);
  }
  return params;
}

namespace {

struct NodeState {
  ad::ValueId s = -1;  // [n, d_s]
  ad::ValueId v = -1;  // [3n, d_v]
  ad::ValueId x = -1;  // [3n, 1]
  int count = 0;
};

ad::ValueId positions_to_tensor(ad::Tape& tape, std::span<const Vec3> pos) {
  ad::Tensor t(static_cast<int>(pos.size()) * 3, 1);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    t(static_cast<int>(3 * i), 0) = pos[i].x;
    t(static_cast<int>(3 * i + 1), 0) = pos[i].y;
    t(static_cast<int>(3 * i + 2), 0) = pos[i].z;
  }
  return tape.constant(std::move(t));
}

std::vector<Vec3> tensor_to_positions(const ad::Tensor& t) {
  std::vector<Vec3> out(t.rows() / 3);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {t(static_cast<int>(3 * i), 0), t(static_cast<int>(3 * i + 1), 0),
              t(static_cast<int>(3 * i + 2), 0)};
  return out;
}

struct EdgeGeometry {
  ad::ValueId rbf = -1;   // [m, n_bases]
  ad::ValueId unit = -1;  // [3m, 1], zero rows on degenerate edges
};

EdgeGeometry edge_geometry(ad::Tape& tape, const NetConfig& cfg, const NodeState& src,
                           const NodeState& dst,
                           const std::vector<std::int32_t>& src_idx,
                           const std::vector<std::int32_t>& dst_idx) {
  const ad::ValueId x_i = tape.gather_rows(dst.x, expand3(dst_idx));
  const ad::ValueId x_j = tape.gather_rows(src.x, expand3(src_idx));
  const ad::ValueId disp = tape.sub(x_i, x_j);
  const ad::ValueId d = tape.vnorm(disp);
  EdgeGeometry geo;
  geo.rbf = tape.rbf(d, cfg.rbf.n_bases, cfg.rbf.r_max);
  geo.unit = tape.vgate(disp, tape.safe_recip(d));
  return geo;
}

}  // namespace

ForwardIds forward_on_tape(ad::Tape& tape, const NetworkParams& params,
                           const graph::FlowState& state) {
  const NetConfig& cfg = params.cfg;
  const graph::ModalityRegistry& reg = params.registry;
  const graph::TaskSpec& task = state.task;
  const int task_idx = params.task_index(task.name);
  const ad::ParamStore& store = params.store;

  const Plan plan = build_plan(reg, params.tasks);

  // --- initial embeddings ---
  std::map<NodeType, NodeState> ns;
  const std::vector<double> t_emb = time_embedding(state.t, cfg.time_dim);

  for (NodeType nt : plan.node_types) {
    const graph::NodeSet* set = state.graph.find_nodes(nt);
    if (set == nullptr || set->count == 0) continue;
    const int n = set->count;
    NodeState node;
    node.count = n;

    std::vector<ad::ValueId> parts;
    for (const graph::ModalityDescriptor* m : reg.node_discrete(nt)) {
      auto it = set->tokens.find(m->id);
      if (it == set->tokens.end())
        fail(Errc::missing_modality, m->id + " missing from graph node set");
      parts.push_back(
          tape.gather_rows(tape.param(store, "emb/" + node_key(nt) + "/" + m->id), it->second));
    }
    if (nt == NodeType::Protein) {
      if (set->aux_dim != cfg.residue_pe_dim)
        fail(Errc::missing_modality, "protein residue encoding dim mismatch");
      ad::Tensor aux(n, set->aux_dim);
      std::copy(set->aux.begin(), set->aux.end(), aux.raw().begin());
      parts.push_back(tape.constant(std::move(aux)));
    }
    ad::Tensor time_rows(n, cfg.time_dim);
    for (int i = 0; i < n; ++i)
      std::copy(t_emb.begin(), t_emb.end(), time_rows.raw().begin() + i * cfg.time_dim);
    parts.push_back(tape.constant(std::move(time_rows)));
    parts.push_back(tape.gather_rows(tape.param(store, "task_table"),
                                     std::vector<std::int32_t>(n, task_idx)));

    node.s = apply_mlp(tape, store, "emb/" + node_key(nt) + "/mlp", tape.concat_cols(parts));
    node.v = tape.constant(ad::Tensor(3 * n, cfg.d_v));
    node.x = positions_to_tensor(tape, set->positions);
    ns[nt] = node;
  }

  // --- edge features and index lists ---
  struct EdgeWork {
    EdgeType type;
    std::vector<std::int32_t> src_idx, dst_idx;
    ad::ValueId e = -1;  // [m, d_e] for featured edge types
    bool featured = false;
  };
  std::vector<EdgeWork> edge_work;
  for (const EdgeType& et : plan.edge_types) {
    const graph::EdgeSet* set = state.graph.find_edges(et);
    if (set == nullptr || set->pairs.empty()) continue;
    if (!ns.count(et.src) || !ns.count(et.dst)) continue;
    EdgeWork w;
    w.type = et;
    w.src_idx.reserve(set->pairs.size());
    w.dst_idx.reserve(set->pairs.size());
    for (auto [s, d] : set->pairs) {
      w.src_idx.push_back(s);
      w.dst_idx.push_back(d);
    }
    const auto featured = reg.edge_discrete(et);
    if (!featured.empty()) {
      w.featured = true;
      const graph::ModalityDescriptor* m = featured.front();
      auto it = set->tokens.find(m->id);
      if (it == set->tokens.end())
        fail(Errc::missing_modality, m->id + " missing from graph edge set");
      w.e = tape.gather_rows(tape.param(store, "emb/" + edge_key(et) + "/" + m->id), it->second);
    }
    edge_work.push_back(std::move(w));
  }

  // --- convolution blocks ---
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const std::string bk = "block" + std::to_string(b);
    for (int conv = 0; conv < cfg.convs_per_block; ++conv) {
      std::map<NodeType, std::pair<ad::ValueId, ad::ValueId>> agg;  // (Ms, Mv)
      for (const EdgeWork& w : edge_work) {
        const NodeState& src = ns.at(w.type.src);
        const NodeState& dst = ns.at(w.type.dst);
        const EdgeGeometry geo = edge_geometry(tape, cfg, src, dst, w.src_idx, w.dst_idx);

        const ad::ValueId s_i = tape.gather_rows(dst.s, w.dst_idx);
        const ad::ValueId s_j = tape.gather_rows(src.s, w.src_idx);
        const ad::ValueId v_i = tape.gather_rows(dst.v, expand3(w.dst_idx));

        std::vector<ad::ValueId> s_parts = {s_i, s_j};
        if (w.featured) s_parts.push_back(w.e);
        s_parts.push_back(geo.rbf);
        GvpIds msg{tape.concat_cols(s_parts), tape.concat_cols({v_i, geo.unit})};
        const bool featured = w.featured;
        for (int g = 0; g < 3; ++g)
          msg = apply_gvp(tape, store, "msg/" + edge_key(w.type) + "/gvp" + std::to_string(g),
                          msg_spec(cfg, featured, g), msg);

        const int n_dst = dst.count;
        const ad::ValueId ms = tape.scatter_add_rows(msg.s, w.dst_idx, n_dst);
        const ad::ValueId mv =
            tape.scatter_add_rows(msg.v, expand3(w.dst_idx), 3 * n_dst);
        auto it = agg.find(w.type.dst);
        if (it == agg.end()) {
          agg[w.type.dst] = {ms, mv};
        } else {
          it->second.first = tape.add(it->second.first, ms);
          it->second.second = tape.add(it->second.second, mv);
        }
      }

      for (auto& [nt, node] : ns) {
        ad::ValueId ms, mv;
        if (auto it = agg.find(nt); it != agg.end()) {
          ms = it->second.first;
          mv = it->second.second;
        } else {
          ms = tape.constant(ad::Tensor(node.count, cfg.d_s));
          mv = tape.constant(ad::Tensor(3 * node.count, cfg.d_v));
        }
        GvpIds upd{tape.concat_cols({node.s, ms}), tape.concat_cols({node.v, mv})};
        for (int g = 0; g < 2; ++g)
          upd = apply_gvp(tape, store, "upd/" + node_key(nt) + "/gvp" + std::to_string(g),
                          upd_spec(cfg, g), upd);
        node.s = tape.add(node.s, upd.s);
        node.v = tape.add(node.v, upd.v);
      }
    }

    // Position updates only for node types whose position modality is being
    // generated under the active task.
    for (NodeType nt : plan.pos_generated) {
      const graph::ModalityDescriptor* pm = reg.position_modality(nt);
      if (pm == nullptr || !task.is_generated(pm->id)) continue;
      auto it = ns.find(nt);
      if (it == ns.end()) continue;
      NodeState& node = it->second;
      const GvpIds dx =
          apply_gvp(tape, store, bk + "/pos/" + node_key(nt), pos_spec(cfg), {node.s, node.v});
      node.x = tape.add(node.x, dx.v);
    }

    for (EdgeWork& w : edge_work) {
      if (!w.featured) continue;
      const NodeState& src = ns.at(w.type.src);
      const NodeState& dst = ns.at(w.type.dst);
      const EdgeGeometry geo = edge_geometry(tape, cfg, src, dst, w.src_idx, w.dst_idx);
      const ad::ValueId s_i = tape.gather_rows(dst.s, w.dst_idx);
      const ad::ValueId s_j = tape.gather_rows(src.s, w.src_idx);
      const ad::ValueId in = tape.concat_cols({w.e, s_i, s_j, geo.rbf});
      w.e = tape.add(w.e, apply_mlp(tape, store, bk + "/edge/" + edge_key(w.type), in));
    }
  }

  // --- outputs, gated by the active task ---
  ForwardIds out;
  for (const std::string& id : task.generated) {
    const graph::ModalityDescriptor& desc = reg.at(id);
    if (!desc.is_discrete()) {
      auto it = ns.find(desc.node_carrier());
      if (it == ns.end()) fail(Errc::missing_modality, "no nodes for generated " + id);
      out.positions[id] = it->second.x;
    } else if (desc.on_nodes()) {
      auto it = ns.find(desc.node_carrier());
      if (it == ns.end()) fail(Errc::missing_modality, "no nodes for generated " + id);
      out.node_logits[id] = apply_mlp(tape, store, "head/" + id, it->second.s);
    } else {
      const EdgeType et = desc.edge_carrier();
      const EdgeWork* work = nullptr;
      for (const EdgeWork& w : edge_work)
        if (w.type == et) work = &w;
      if (work == nullptr) fail(Errc::missing_modality, "no edges for generated " + id);
      // Logits per directed edge, averaged over the two directions of each
      // unordered pair.
      const ad::ValueId directed = apply_mlp(tape, store, "head/" + id, work->e);
      const flow::PairIndex idx = flow::build_pair_index(*state.graph.find_edges(et));
      ForwardIds::EdgeLogits el;
      el.pairs = idx.pairs;
      std::vector<std::int32_t> first, second;
      first.reserve(idx.pairs.size());
      second.reserve(idx.pairs.size());
      for (const auto& slots : idx.edge_slots) {
        first.push_back(static_cast<std::int32_t>(slots.front()));
        second.push_back(static_cast<std::int32_t>(slots.back()));
      }
      el.logits = tape.scale(tape.add(tape.gather_rows(directed, first),
                                      tape.gather_rows(directed, second)),
                             0.5);
      out.edge_logits[id] = std::move(el);
    }
  }
  return out;
}

flow::DenoiserOutput forward(const NetworkParams& params, const graph::FlowState& state) {
  ad::Tape tape;
  const ForwardIds ids = forward_on_tape(tape, params, state);
  flow::DenoiserOutput out;
  for (const auto& [id, vid] : ids.positions)
    out.positions[id] = tensor_to_positions(tape.value(vid));
  for (const auto& [id, vid] : ids.node_logits) out.node_logits[id] = tape.value(vid);
  for (const auto& [id, el] : ids.edge_logits) {
    flow::PairLogits pl;
    pl.pairs = el.pairs;
    pl.logits = tape.value(el.logits);
    out.edge_logits[id] = std::move(pl);
  }
  return out;
}

}  // namespace ligflow::net
