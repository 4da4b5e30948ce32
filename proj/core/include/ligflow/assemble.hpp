#pragma once

#include <optional>
#include <span>

#include "ligflow/chem.hpp"
#include "ligflow/hetgraph.hpp"
#include "ligflow/rng.hpp"

namespace ligflow::assemble {

struct GraphConfig {
  double lig_prot_cutoff = 5.0;
  double lig_pharm_cutoff = 5.0;
  double prot_prot_cutoff = 5.0;
  double lig_npnde_cutoff = 5.0;
  int residue_pe_dim = 16;
};

// Token id for an element in the protein/NPNDE element vocabularies.
inline int element_token(chem::Element e) { return static_cast<int>(e); }
// NPNDE formal charges are tokenized with a +2 offset (range -2..2).
int npnde_charge_token(int charge);

// Builds a heterogeneous graph holding the task's present modalities at their
// data values. Node types whose modalities are all absent are left out.
graph::HeteroGraph build_graph(const chem::ToyMolecule& ligand,
                               std::span<const chem::PharmacophoreFeature> pharms,
                               const chem::CondensedVocab& vocab, const graph::TaskSpec& task,
                               const graph::ModalityRegistry& registry, const GraphConfig& cfg);

graph::HeteroGraph build_graph(const chem::SystemRecord& system,
                               std::span<const chem::PharmacophoreFeature> pharms,
                               const chem::CondensedVocab& vocab, const graph::TaskSpec& task,
                               const graph::ModalityRegistry& registry, const GraphConfig& cfg);

// Recomputes the distance-derived edge sets that involve the (moving) ligand;
// the complete ligand subgraph and NPNDE bond edges are preserved.
void rebuild_cross_edges(graph::HeteroGraph& g, const GraphConfig& cfg);

// Decodes the ligand carried by a graph back into a molecule.
chem::ToyMolecule extract_ligand(const graph::HeteroGraph& g, const chem::CondensedVocab& vocab);

enum class PriorCenter { LigandCom, PocketCentroid, PharmCentroid, Origin };

// Sampling-time rule: pocket centroid when a pocket is present, else the
// pharmacophore centroid, else the origin. Training uses the data ligand COM.
PriorCenter default_prior_center(const graph::TaskSpec& task,
                                 const graph::ModalityRegistry& registry);
Vec3 resolve_prior_center(const graph::HeteroGraph& g, PriorCenter center);

// Initial sampling state: generated discrete modalities fully masked,
// generated positions drawn from the Gaussian prior, cross edges rebuilt.
graph::FlowState make_initial_state(const graph::HeteroGraph& conditioning,
                                    const graph::TaskSpec& task,
                                    const graph::ModalityRegistry& registry, double prior_variance,
                                    std::optional<Vec3> prior_center, const GraphConfig& cfg,
                                    Rng& rng);

}  // namespace ligflow::assemble
