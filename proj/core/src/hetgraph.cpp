#include "ligflow/hetgraph.hpp"

#include <algorithm>

namespace ligflow::graph {

namespace mod = modality;

std::string_view to_string(NodeType t) {
  switch (t) {
    case NodeType::Ligand: return "ligand";
    case NodeType::Protein: return "protein";
    case NodeType::Pharmacophore: return "pharmacophore";
    case NodeType::Npnde: return "npnde";
  }
  return "?";
}

std::optional<NodeType> node_type_from_string(std::string_view s) {
  for (NodeType t : kNodeTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::string to_string(EdgeType t) {
  return std::string(to_string(t.src)) + "-" + std::string(to_string(t.dst));
}

ModalityRegistry::ModalityRegistry(std::vector<ModalityDescriptor> descriptors)
    : mods_(std::move(descriptors)) {
  for (int i = 0; i < static_cast<int>(mods_.size()); ++i) {
    const ModalityDescriptor& m = mods_[i];
    if (m.is_discrete() && m.vocab_size < 2)
      fail(Errc::invalid_input, "modality " + m.id + " needs vocab_size >= 2");
    if (!m.is_discrete() && m.dim < 1)
      fail(Errc::invalid_input, "modality " + m.id + " needs dim >= 1");
    if (!index_.emplace(m.id, i).second)
      fail(Errc::duplicate_modality, "modality id " + m.id + " registered twice");
  }
}

ModalityRegistry register_modalities(std::vector<ModalityDescriptor> descriptors) {
  return ModalityRegistry(std::move(descriptors));
}

int ModalityRegistry::handle(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(Errc::unknown_modality, std::string(id));
  return it->second;
}

const ModalityDescriptor* ModalityRegistry::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &mods_[it->second];
}

std::vector<const ModalityDescriptor*> ModalityRegistry::node_discrete(NodeType t) const {
  std::vector<const ModalityDescriptor*> out;
  for (const ModalityDescriptor& m : mods_)
    if (m.is_discrete() && m.on_nodes() && m.node_carrier() == t) out.push_back(&m);
  return out;
}

const ModalityDescriptor* ModalityRegistry::position_modality(NodeType t) const {
  for (const ModalityDescriptor& m : mods_)
    if (!m.is_discrete() && m.on_nodes() && m.node_carrier() == t && m.dim == 3) return &m;
  return nullptr;
}

std::vector<const ModalityDescriptor*> ModalityRegistry::edge_discrete(EdgeType t) const {
  std::vector<const ModalityDescriptor*> out;
  for (const ModalityDescriptor& m : mods_)
    if (m.is_discrete() && !m.on_nodes() && m.edge_carrier() == t) out.push_back(&m);
  return out;
}

bool TaskSpec::node_type_present(NodeType t, const ModalityRegistry& reg) const {
  for (const ModalityDescriptor& m : reg.descriptors()) {
    const bool carried = m.on_nodes() ? m.node_carrier() == t
                                      : (m.edge_carrier().src == t || m.edge_carrier().dst == t);
    if (carried && is_present(m.id)) return true;
  }
  return false;
}

void validate_task(const TaskSpec& spec, const ModalityRegistry& registry) {
  auto check_known = [&](const std::set<std::string>& ids) {
    for (const std::string& id : ids)
      if (registry.find(id) == nullptr)
        fail(Errc::unknown_modality, "task " + spec.name + " names unknown modality " + id);
  };
  check_known(spec.generated);
  check_known(spec.conditioning);
  check_known(spec.absent);

  auto overlap = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::ranges::any_of(a, [&](const std::string& id) { return b.count(id) > 0; });
  };
  if (overlap(spec.generated, spec.conditioning) || overlap(spec.generated, spec.absent) ||
      overlap(spec.conditioning, spec.absent))
    fail(Errc::overlapping_sets, "task " + spec.name);

  for (const ModalityDescriptor& m : registry.descriptors()) {
    if (!spec.generated.count(m.id) && !spec.conditioning.count(m.id) && !spec.absent.count(m.id))
      fail(Errc::uncovered_modality, "task " + spec.name + " does not place " + m.id);
  }

  for (const std::string& id : spec.generated) {
    auto it = spec.assignments.find(id);
    if (it == spec.assignments.end() || it->second.prior.empty() || it->second.coupling.empty() ||
        it->second.path.empty())
      fail(Errc::missing_prior_assignment, "task " + spec.name + " modality " + id);
  }
}

const NodeSet* HeteroGraph::find_nodes(NodeType t) const {
  auto it = nodes.find(t);
  return it == nodes.end() ? nullptr : &it->second;
}

const EdgeSet* HeteroGraph::find_edges(EdgeType t) const {
  auto it = edges.find(t);
  return it == edges.end() ? nullptr : &it->second;
}

int HeteroGraph::node_count(NodeType t) const {
  const NodeSet* s = find_nodes(t);
  return s == nullptr ? 0 : s->count;
}

void HeteroGraph::check(const ModalityRegistry& registry) const {
  for (const auto& [type, set] : nodes) {
    if (static_cast<int>(set.positions.size()) != set.count)
      fail(Errc::size_mismatch, "positions length for " + std::string(to_string(type)));
    for (const auto& [id, tokens] : set.tokens) {
      const ModalityDescriptor& m = registry.at(id);
      if (static_cast<int>(tokens.size()) != set.count)
        fail(Errc::size_mismatch, "token array length for " + id);
      for (std::int32_t tok : tokens)
        if (tok < 0 || tok >= m.vocab_size) fail(Errc::invalid_input, "token range for " + id);
    }
    if (set.aux_dim > 0 &&
        static_cast<int>(set.aux.size()) != set.count * set.aux_dim)
      fail(Errc::size_mismatch, "aux array length for " + std::string(to_string(type)));
  }
  for (const auto& [type, set] : edges) {
    const int n_src = node_count(type.src);
    const int n_dst = node_count(type.dst);
    for (const auto& [s, d] : set.pairs)
      if (s < 0 || s >= n_src || d < 0 || d >= n_dst)
        fail(Errc::index_error, "edge endpoint out of range in " + to_string(type));
    for (const auto& [id, tokens] : set.tokens)
      if (tokens.size() != set.pairs.size())
        fail(Errc::size_mismatch, "edge token array length for " + id);
  }
  const EdgeType ll{NodeType::Ligand, NodeType::Ligand};
  if (const EdgeSet* set = find_edges(ll)) {
    const int n = node_count(NodeType::Ligand);
    if (static_cast<int>(set->pairs.size()) != n * (n - 1))
      fail(Errc::size_mismatch, "ligand-ligand edges must cover all ordered pairs");
  }
}

std::vector<std::pair<std::int32_t, std::int32_t>> build_complete_ligand_edges(int n_ligand_atoms) {
  if (n_ligand_atoms == 0) fail(Errc::empty_ligand, "no ligand atoms");
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  out.reserve(static_cast<std::size_t>(n_ligand_atoms) * (n_ligand_atoms - 1));
  for (std::int32_t i = 0; i < n_ligand_atoms; ++i)
    for (std::int32_t j = 0; j < n_ligand_atoms; ++j)
      if (i != j) out.emplace_back(i, j);
  return out;
}

std::vector<std::pair<std::int32_t, std::int32_t>> build_cross_edges(
    std::span<const Vec3> src_positions, std::span<const Vec3> dst_positions, double cutoff,
    bool skip_same_index) {
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  const double c2 = cutoff * cutoff;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(src_positions.size()); ++i) {
    for (std::int32_t j = 0; j < static_cast<std::int32_t>(dst_positions.size()); ++j) {
      if (skip_same_index && i == j) continue;
      if (norm2(src_positions[i] - dst_positions[j]) <= c2) out.emplace_back(i, j);
    }
  }
  return out;
}

ModalityRegistry standard_registry(const StandardSizes& sizes) {
  using NT = NodeType;
  const EdgeType ll{NT::Ligand, NT::Ligand};
  const EdgeType nn{NT::Npnde, NT::Npnde};
  auto disc = [](const char* id, int vocab, auto carrier) {
    ModalityDescriptor m;
    m.id = id;
    m.kind = ModalityKind::Discrete;
    m.vocab_size = vocab;
    m.carrier = carrier;
    return m;
  };
  auto cont = [](const char* id, auto carrier) {
    ModalityDescriptor m;
    m.id = id;
    m.kind = ModalityKind::Continuous;
    m.dim = 3;
    m.carrier = carrier;
    return m;
  };
  return ModalityRegistry({
      cont(mod::kLigPos, NT::Ligand),
      disc(mod::kLigAtomType, sizes.lig_atom_type_vocab, NT::Ligand),
      disc(mod::kLigBondOrder, sizes.lig_bond_vocab, ll),
      cont(mod::kPharmPos, NT::Pharmacophore),
      disc(mod::kPharmType, sizes.pharm_type_vocab, NT::Pharmacophore),
      cont(mod::kProtPos, NT::Protein),
      cont(mod::kNpndePos, NT::Npnde),
      disc(mod::kProtResName, sizes.prot_res_name_vocab, NT::Protein),
      disc(mod::kProtElement, sizes.prot_element_vocab, NT::Protein),
      disc(mod::kProtAtomName, sizes.prot_atom_name_vocab, NT::Protein),
      disc(mod::kNpndeElement, sizes.npnde_element_vocab, NT::Npnde),
      disc(mod::kNpndeCharge, sizes.npnde_charge_vocab, NT::Npnde),
      disc(mod::kNpndeBondOrder, sizes.npnde_bond_vocab, nn),
  });
}

namespace {

const std::set<std::string> kLigandIdentity = {mod::kLigAtomType, mod::kLigBondOrder};
const std::set<std::string> kLigandStructure = {mod::kLigPos};
const std::set<std::string> kPharm = {mod::kPharmPos, mod::kPharmType};
const std::set<std::string> kProteinAll = {
    mod::kProtPos, mod::kNpndePos, mod::kProtResName, mod::kProtElement, mod::kProtAtomName,
    mod::kNpndeElement, mod::kNpndeCharge, mod::kNpndeBondOrder};

std::set<std::string> join(std::initializer_list<std::set<std::string>> parts) {
  std::set<std::string> out;
  for (const auto& p : parts) out.insert(p.begin(), p.end());
  return out;
}

TaskSpec make_task(const ModalityRegistry& reg, std::string name, std::set<std::string> generated,
                   std::set<std::string> conditioning) {
  TaskSpec spec;
  spec.name = std::move(name);
  spec.generated = std::move(generated);
  spec.conditioning = std::move(conditioning);
  for (const ModalityDescriptor& m : reg.descriptors())
    if (!spec.generated.count(m.id) && !spec.conditioning.count(m.id)) spec.absent.insert(m.id);
  for (const std::string& id : spec.generated) {
    GeneratedAssignment a;
    if (reg.at(id).is_discrete()) {
      a.prior = "mask";
      a.coupling = "independent";
      a.path = "masked_dfm";
    } else {
      a.prior = "gaussian_com";
      // Distance-minimizing permutation only where the ligand identity is
      // itself generated; conformer/docking keep the identity pairing.
      a.coupling = spec.generated.count(mod::kLigAtomType) ? "permutation" : "independent";
      a.path = "distortion";
    }
    spec.assignments[id] = std::move(a);
  }
  return spec;
}

}  // namespace

std::vector<TaskSpec> standard_tasks(const ModalityRegistry& reg) {
  std::vector<TaskSpec> tasks;
  tasks.push_back(make_task(reg, "uncond_denovo", join({kLigandIdentity, kLigandStructure}), {}));
  tasks.push_back(make_task(reg, "conformer", kLigandStructure, kLigandIdentity));
  tasks.push_back(make_task(reg, "rigid_docking", kLigandStructure,
                            join({kLigandIdentity, kProteinAll})));
  tasks.push_back(make_task(reg, "pocket_denovo", join({kLigandIdentity, kLigandStructure}),
                            kProteinAll));
  tasks.push_back(make_task(reg, "pharm_denovo", join({kLigandIdentity, kLigandStructure}),
                            kPharm));
  tasks.push_back(make_task(reg, "pharm_conformer", kLigandStructure,
                            join({kLigandIdentity, kPharm})));
  tasks.push_back(make_task(reg, "pharm_docking", kLigandStructure,
                            join({kLigandIdentity, kProteinAll, kPharm})));
  tasks.push_back(make_task(reg, "pocket_pharm_denovo",
                            join({kLigandIdentity, kLigandStructure}),
                            join({kProteinAll, kPharm})));
  for (const TaskSpec& t : tasks) validate_task(t, reg);
  return tasks;
}

TaskSpec standard_task(std::string_view name, const ModalityRegistry& reg) {
  for (TaskSpec& t : standard_tasks(reg))
    if (t.name == name) return std::move(t);
  fail(Errc::unknown_task, std::string(name));
}

}  // namespace ligflow::graph
