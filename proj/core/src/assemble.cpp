#include "ligflow/assemble.hpp"

#include <algorithm>

#include "ligflow/flow.hpp"

namespace ligflow::assemble {

namespace mod = graph::modality;
using graph::EdgeType;
using graph::NodeType;

int npnde_charge_token(int charge) { return std::clamp(charge, -2, 2) + 2; }

namespace {

void add_ligand_nodes(graph::HeteroGraph& g, const chem::ToyMolecule& ligand,
                      const chem::CondensedVocab& vocab, const graph::TaskSpec& task) {
  graph::NodeSet set;
  set.count = ligand.n_atoms();
  set.positions = ligand.coords;
  if (task.is_present(mod::kLigAtomType))
    set.tokens[mod::kLigAtomType] = chem::encode_atoms(ligand, vocab);
  g.nodes[NodeType::Ligand] = std::move(set);

  graph::EdgeSet edges;
  edges.pairs = graph::build_complete_ligand_edges(ligand.n_atoms());
  if (task.is_present(mod::kLigBondOrder)) {
    std::vector<std::int32_t> orders;
    orders.reserve(edges.pairs.size());
    for (auto [i, j] : edges.pairs) orders.push_back(ligand.bond(i, j));
    edges.tokens[mod::kLigBondOrder] = std::move(orders);
  }
  g.edges[{NodeType::Ligand, NodeType::Ligand}] = std::move(edges);
}

void add_pharm_nodes(graph::HeteroGraph& g, std::span<const chem::PharmacophoreFeature> pharms,
                     const graph::TaskSpec& task) {
  if (!task.is_present(mod::kPharmPos) || pharms.empty()) return;
  graph::NodeSet set;
  set.count = static_cast<int>(pharms.size());
  for (const chem::PharmacophoreFeature& f : pharms) {
    set.positions.push_back(f.center);
    set.tokens[mod::kPharmType].push_back(static_cast<std::int32_t>(f.kind));
  }
  g.nodes[NodeType::Pharmacophore] = std::move(set);
}

void add_protein_nodes(graph::HeteroGraph& g, const chem::SystemRecord& system,
                       const graph::TaskSpec& task, const GraphConfig& cfg) {
  if (!task.is_present(mod::kProtPos) || system.protein.count() == 0) return;
  const chem::ProteinAtoms& prot = system.protein;
  graph::NodeSet set;
  set.count = prot.count();
  set.positions = prot.coords;
  set.tokens[mod::kProtElement].reserve(prot.count());
  for (chem::Element e : prot.elements)
    set.tokens[mod::kProtElement].push_back(element_token(e));
  set.tokens[mod::kProtAtomName] = prot.atom_names;
  set.tokens[mod::kProtResName] = prot.residue_names;
  set.aux_dim = cfg.residue_pe_dim;
  set.aux.reserve(static_cast<std::size_t>(prot.count()) * cfg.residue_pe_dim);
  for (std::int32_t idx : prot.residue_indices) {
    const std::vector<double> pe = chem::residue_positional_encoding(idx, cfg.residue_pe_dim);
    set.aux.insert(set.aux.end(), pe.begin(), pe.end());
  }
  g.nodes[NodeType::Protein] = std::move(set);

  if (task.is_present(mod::kNpndePos) && system.npnde.count() > 0) {
    const chem::NpndeAtoms& np = system.npnde;
    graph::NodeSet nset;
    nset.count = np.count();
    nset.positions = np.coords;
    for (chem::Element e : np.elements)
      nset.tokens[mod::kNpndeElement].push_back(element_token(e));
    for (std::int8_t c : np.charges)
      nset.tokens[mod::kNpndeCharge].push_back(npnde_charge_token(c));
    g.nodes[NodeType::Npnde] = std::move(nset);

    graph::EdgeSet nn;
    for (const auto& [i, j, order] : np.bonds) {
      nn.pairs.emplace_back(i, j);
      nn.tokens[mod::kNpndeBondOrder].push_back(order);
      nn.pairs.emplace_back(j, i);
      nn.tokens[mod::kNpndeBondOrder].push_back(order);
    }
    g.edges[{NodeType::Npnde, NodeType::Npnde}] = std::move(nn);
  }
}

}  // namespace

void rebuild_cross_edges(graph::HeteroGraph& g, const GraphConfig& cfg) {
  const graph::NodeSet* lig = g.find_nodes(NodeType::Ligand);
  if (lig == nullptr) return;
  auto both_ways = [&](NodeType other, double cutoff) {
    const graph::NodeSet* o = g.find_nodes(other);
    if (o == nullptr || o->count == 0) return;
    graph::EdgeSet fwd, rev;
    fwd.pairs = graph::build_cross_edges(lig->positions, o->positions, cutoff);
    for (auto [i, j] : fwd.pairs) rev.pairs.emplace_back(j, i);
    g.edges[{NodeType::Ligand, other}] = std::move(fwd);
    g.edges[{other, NodeType::Ligand}] = std::move(rev);
  };
  both_ways(NodeType::Protein, cfg.lig_prot_cutoff);
  both_ways(NodeType::Pharmacophore, cfg.lig_pharm_cutoff);
  both_ways(NodeType::Npnde, cfg.lig_npnde_cutoff);

  // Protein-protein edges depend only on (fixed) protein positions; build
  // them once if missing.
  const graph::NodeSet* prot = g.find_nodes(NodeType::Protein);
  if (prot != nullptr && prot->count > 0 &&
      g.find_edges({NodeType::Protein, NodeType::Protein}) == nullptr) {
    graph::EdgeSet pp;
    pp.pairs = graph::build_cross_edges(prot->positions, prot->positions, cfg.prot_prot_cutoff,
                                        /*skip_same_index=*/true);
    g.edges[{NodeType::Protein, NodeType::Protein}] = std::move(pp);
  }
}

graph::HeteroGraph build_graph(const chem::ToyMolecule& ligand,
                               std::span<const chem::PharmacophoreFeature> pharms,
                               const chem::CondensedVocab& vocab, const graph::TaskSpec& task,
                               const graph::ModalityRegistry& registry, const GraphConfig& cfg) {
  graph::HeteroGraph g;
  add_ligand_nodes(g, ligand, vocab, task);
  add_pharm_nodes(g, pharms, task);
  rebuild_cross_edges(g, cfg);
  g.check(registry);
  return g;
}

graph::HeteroGraph build_graph(const chem::SystemRecord& system,
                               std::span<const chem::PharmacophoreFeature> pharms,
                               const chem::CondensedVocab& vocab, const graph::TaskSpec& task,
                               const graph::ModalityRegistry& registry, const GraphConfig& cfg) {
  graph::HeteroGraph g;
  add_ligand_nodes(g, system.ligand, vocab, task);
  add_pharm_nodes(g, pharms, task);
  add_protein_nodes(g, system, task, cfg);
  rebuild_cross_edges(g, cfg);
  g.check(registry);
  return g;
}

chem::ToyMolecule extract_ligand(const graph::HeteroGraph& g, const chem::CondensedVocab& vocab) {
  const graph::NodeSet* set = g.find_nodes(NodeType::Ligand);
  if (set == nullptr || set->count == 0) fail(Errc::empty_ligand, "extract_ligand");
  chem::ToyMolecule mol;
  mol.resize(set->count);
  mol.coords = set->positions;
  const auto& tokens = set->tokens.at(mod::kLigAtomType);
  for (int i = 0; i < set->count; ++i) {
    if (tokens[i] == vocab.mask_token())
      fail(Errc::invalid_input, "extract_ligand hit a mask token");
    mol.atoms[i] = chem::atom_from_tuple(vocab.decode(tokens[i]));
  }
  const graph::EdgeSet* ll = g.find_edges({NodeType::Ligand, NodeType::Ligand});
  if (ll != nullptr) {
    if (auto it = ll->tokens.find(mod::kLigBondOrder); it != ll->tokens.end()) {
      for (std::size_t e = 0; e < ll->pairs.size(); ++e) {
        auto [i, j] = ll->pairs[e];
        const std::int32_t tok = it->second[e];
        if (tok < 0 || tok > 3)
          fail(Errc::invalid_input, "extract_ligand hit a non-order bond token");
        mol.set_bond(i, j, static_cast<std::uint8_t>(tok));
      }
    }
  }
  return mol;
}

PriorCenter default_prior_center(const graph::TaskSpec& task,
                                 const graph::ModalityRegistry& registry) {
  (void)registry;
  if (task.is_present(mod::kProtPos)) return PriorCenter::PocketCentroid;
  if (task.is_present(mod::kPharmPos)) return PriorCenter::PharmCentroid;
  return PriorCenter::Origin;
}

Vec3 resolve_prior_center(const graph::HeteroGraph& g, PriorCenter center) {
  auto centroid_of = [&](NodeType nt) -> Vec3 {
    const graph::NodeSet* set = g.find_nodes(nt);
    if (set == nullptr || set->count == 0) return {};
    return centroid(set->positions);
  };
  switch (center) {
    case PriorCenter::LigandCom: return centroid_of(NodeType::Ligand);
    case PriorCenter::PocketCentroid: return centroid_of(NodeType::Protein);
    case PriorCenter::PharmCentroid: return centroid_of(NodeType::Pharmacophore);
    case PriorCenter::Origin: return {};
  }
  return {};
}

graph::FlowState make_initial_state(const graph::HeteroGraph& conditioning,
                                    const graph::TaskSpec& task,
                                    const graph::ModalityRegistry& registry, double prior_variance,
                                    std::optional<Vec3> prior_center, const GraphConfig& cfg,
                                    Rng& rng) {
  graph::FlowState state;
  state.t = 0.0;
  state.task = task;
  state.graph = conditioning;

  const Vec3 center = prior_center.has_value()
                          ? *prior_center
                          : resolve_prior_center(conditioning,
                                                 default_prior_center(task, registry));

  for (const std::string& id : task.generated) {
    const graph::ModalityDescriptor& desc = registry.at(id);
    if (!desc.is_discrete()) {
      auto it = state.graph.nodes.find(desc.node_carrier());
      if (it == state.graph.nodes.end()) fail(Errc::missing_modality, id);
      flow::GaussianPrior prior{center, prior_variance};
      it->second.positions = flow::sample_position_prior(it->second.count, prior, rng);
    } else if (desc.on_nodes()) {
      auto it = state.graph.nodes.find(desc.node_carrier());
      if (it == state.graph.nodes.end()) fail(Errc::missing_modality, id);
      it->second.tokens[id].assign(it->second.count, desc.mask_token());
    } else {
      auto it = state.graph.edges.find(desc.edge_carrier());
      if (it == state.graph.edges.end()) fail(Errc::missing_modality, id);
      it->second.tokens[id].assign(it->second.pairs.size(), desc.mask_token());
    }
  }
  rebuild_cross_edges(state.graph, cfg);
  return state;
}

}  // namespace ligflow::assemble
