#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ligflow/error.hpp"
#include "ligflow/geom.hpp"

namespace ligflow::graph {

enum class NodeType : std::uint8_t { Ligand, Protein, Pharmacophore, Npnde };

inline constexpr std::array<NodeType, 4> kNodeTypes = {
    NodeType::Ligand, NodeType::Protein, NodeType::Pharmacophore, NodeType::Npnde};

std::string_view to_string(NodeType t);
std::optional<NodeType> node_type_from_string(std::string_view s);

struct EdgeType {
  NodeType src;
  NodeType dst;
  auto operator<=>(const EdgeType&) const = default;
};

std::string to_string(EdgeType t);

enum class ModalityKind : std::uint8_t { Discrete, Continuous };

struct ModalityDescriptor {
  std::string id;
  ModalityKind kind = ModalityKind::Discrete;
  int vocab_size = 0;  // Discrete: includes the mask token, >= 2
  int dim = 0;         // Continuous
  std::variant<NodeType, EdgeType> carrier;

  bool is_discrete() const { return kind == ModalityKind::Discrete; }
  bool on_nodes() const { return std::holds_alternative<NodeType>(carrier); }
  NodeType node_carrier() const { return std::get<NodeType>(carrier); }
  EdgeType edge_carrier() const { return std::get<EdgeType>(carrier); }
  // Mask token is the last vocabulary index by convention.
  int mask_token() const { return vocab_size - 1; }
};

class ModalityRegistry {
 public:
  ModalityRegistry() = default;
  explicit ModalityRegistry(std::vector<ModalityDescriptor> descriptors);

  int handle(std::string_view id) const;  // throws UnknownModality
  const ModalityDescriptor* find(std::string_view id) const;
  const ModalityDescriptor& at(int handle) const { return mods_.at(handle); }
  const ModalityDescriptor& at(std::string_view id) const { return mods_.at(handle(id)); }
  int size() const { return static_cast<int>(mods_.size()); }
  const std::vector<ModalityDescriptor>& descriptors() const { return mods_; }

  // Discrete node modalities carried by `t`, in registration order.
  std::vector<const ModalityDescriptor*> node_discrete(NodeType t) const;
  // The dim-3 continuous modality carried by `t`, if any.
  const ModalityDescriptor* position_modality(NodeType t) const;
  std::vector<const ModalityDescriptor*> edge_discrete(EdgeType t) const;

 private:
  std::vector<ModalityDescriptor> mods_;
  std::map<std::string, int, std::less<>> index_;
};

ModalityRegistry register_modalities(std::vector<ModalityDescriptor> descriptors);

struct GeneratedAssignment {
  std::string prior;
  std::string coupling;
  std::string path;
};

struct TaskSpec {
  std::string name;
  std::set<std::string> generated;
  std::set<std::string> conditioning;
  std::set<std::string> absent;
  std::map<std::string, GeneratedAssignment> assignments;

  bool is_generated(std::string_view id) const { return generated.count(std::string(id)) > 0; }
  bool is_conditioning(std::string_view id) const { return conditioning.count(std::string(id)) > 0; }
  bool is_absent(std::string_view id) const { return absent.count(std::string(id)) > 0; }
  bool is_present(std::string_view id) const { return !is_absent(id); }
  // A node type participates when at least one of its modalities is present.
  bool node_type_present(NodeType t, const ModalityRegistry& reg) const;
};

// Checks the partition property and prior/coupling/path assignments; throws
// OverlappingSets, UncoveredModality, UnknownModality or MissingPriorAssignment.
void validate_task(const TaskSpec& spec, const ModalityRegistry& registry);

struct NodeSet {
  int count = 0;
  std::vector<Vec3> positions;
  std::map<std::string, std::vector<std::int32_t>> tokens;
  // Optional per-node continuous context (e.g. residue positional encoding),
  // row-major [count, aux_dim]. Not a modality.
  int aux_dim = 0;
  std::vector<double> aux;
};

struct EdgeSet {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;  // (src, dst), local indices
  std::map<std::string, std::vector<std::int32_t>> tokens;
};

struct HeteroGraph {
  std::map<NodeType, NodeSet> nodes;
  std::map<EdgeType, EdgeSet> edges;

  const NodeSet* find_nodes(NodeType t) const;
  NodeSet& node_set(NodeType t) { return nodes[t]; }
  const EdgeSet* find_edges(EdgeType t) const;
  int node_count(NodeType t) const;

  // Enforces the structural invariants: index ranges, modality array lengths
  // matching carrier counts, and the complete ligand subgraph.
  void check(const ModalityRegistry& registry) const;
};

// All ordered pairs (i, j), i != j. n = 0 is EmptyLigand; n = 1 has no edges.
std::vector<std::pair<std::int32_t, std::int32_t>> build_complete_ligand_edges(int n_ligand_atoms);

// All (i, j) with |src[i] - dst[j]| <= cutoff, ordered lexicographically.
// skip_same_index suppresses (i, i) when src and dst are the same node set.
std::vector<std::pair<std::int32_t, std::int32_t>> build_cross_edges(
    std::span<const Vec3> src_positions, std::span<const Vec3> dst_positions, double cutoff,
    bool skip_same_index = false);

struct FlowState {
  double t = 0.0;
  HeteroGraph graph;
  TaskSpec task;
};

// The stock 13-modality registry. Vocabulary sizes include the mask token.
struct StandardSizes {
  int lig_atom_type_vocab = 0;  // condensed vocab size incl. mask
  int lig_bond_vocab = 5;       // orders 0..3 + mask
  int pharm_type_vocab = 8;     // 7 kinds + mask
  int prot_element_vocab = 12;  // 11 supported elements + mask
  int prot_atom_name_vocab = 38;
  int prot_res_name_vocab = 21;
  int npnde_element_vocab = 12;
  int npnde_charge_vocab = 6;  // charges -2..2 + mask
  int npnde_bond_vocab = 5;
};

ModalityRegistry standard_registry(const StandardSizes& sizes);

// The shipped task partitions. Every spec validates against the registry.
std::vector<TaskSpec> standard_tasks(const ModalityRegistry& registry);
TaskSpec standard_task(std::string_view name, const ModalityRegistry& registry);

namespace modality {
inline constexpr const char* kLigPos = "lig_pos";
inline constexpr const char* kLigAtomType = "lig_atom_type";
inline constexpr const char* kLigBondOrder = "lig_bond_order";
inline constexpr const char* kPharmPos = "pharm_pos";
inline constexpr const char* kPharmType = "pharm_type";
inline constexpr const char* kProtPos = "prot_pos";
inline constexpr const char* kNpndePos = "npnde_pos";
inline constexpr const char* kProtResName = "prot_res_name";
inline constexpr const char* kProtElement = "prot_element";
inline constexpr const char* kProtAtomName = "prot_atom_name";
inline constexpr const char* kNpndeElement = "npnde_element";
inline constexpr const char* kNpndeCharge = "npnde_charge";
inline constexpr const char* kNpndeBondOrder = "npnde_bond_order";
}  // namespace modality

}  // namespace ligflow::graph
