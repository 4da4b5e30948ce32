#pragma once

#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ligflow/chem.hpp"
#include "ligflow/geom.hpp"

namespace ligflow::eval {

struct ValidityConfig {
  double bond_min = 0.7;   // A
  double bond_max = 2.0;   // A
  double clash = 1.7;      // nonbonded pairs closer than this fail
};

// Structural validity battery: a documented subset of the full PoseBusters
// suite (valence, connectivity, bond lengths, clashes).
struct ValidityReport {
  bool sanitizable = false;
  bool connected = false;
  bool bond_lengths_ok = false;
  bool clash_free = false;

  bool pb_valid() const { return sanitizable && connected && bond_lengths_ok && clash_free; }
};

ValidityReport check_validity(const chem::ToyMolecule& mol,
                              const chem::ProteinAtoms* pocket = nullptr,
                              const ValidityConfig& cfg = {});

// Fixed-order RMSD; poses share the pocket frame, so no alignment is applied.
double rmsd(std::span<const Vec3> generated, std::span<const Vec3> reference);

// Atoms with four distinct bonded neighbors.
std::vector<int> stereocenters(const chem::ToyMolecule& mol);

// Per stereocenter of the reference: does the signed volume of the ordered
// neighbor tetrahedron keep its sign in the generated structure?
std::vector<bool> chirality_preserved(const chem::ToyMolecule& generated,
                                      const chem::ToyMolecule& reference);
int chirality_violations(const chem::ToyMolecule& generated, const chem::ToyMolecule& reference);

// Fraction of conditioning features matched by a same-kind feature of the
// generated molecule within `tol` angstrom.
double pharm_match_rate(std::span<const chem::PharmacophoreFeature> conditioning,
                        const chem::ToyMolecule& generated, double tol = 1.0);

struct InteractionConfig {
  double hbond_cutoff = 3.5;
  double hydrophobic_cutoff = 4.0;
};

enum class InteractionType : std::uint8_t { Donor, Acceptor, Hydrophobic };

// Per-type counts of interacting ligand atoms divided by the ligand atom count.
struct InteractionProfile {
  double donor = 0.0;
  double acceptor = 0.0;
  double hydrophobic = 0.0;
};

InteractionProfile interaction_profile(const chem::ToyMolecule& mol,
                                       const chem::ProteinAtoms& pocket,
                                       const InteractionConfig& cfg = {});

// True iff every type's normalized count is >= the reference's.
bool interaction_parity(const InteractionProfile& generated, const InteractionProfile& reference);

struct InteractionKey {
  InteractionType type;
  std::int32_t residue_index;
  auto operator<=>(const InteractionKey&) const = default;
};

std::set<InteractionKey> interaction_set(const chem::ToyMolecule& mol,
                                         const chem::ProteinAtoms& pocket,
                                         const InteractionConfig& cfg = {});

// |generated intersect reference| / |reference|; 1.0 when the reference is empty.
double interaction_recovery(const std::set<InteractionKey>& generated,
                            const std::set<InteractionKey>& reference);

struct RankingEntry {
  int pose_id = 0;
  double score = 0.0;  // lower is better
  int chirality_violations = 0;
  double penalized_score = 0.0;
};

// Sorts ascending by penalized score (ties by pose id) and returns the first
// N ids; N larger than the pose count takes everything.
std::vector<int> rank_poses(std::vector<RankingEntry> entries, double penalty_weight, int n);

using Scorer = std::function<double(const chem::ToyMolecule&, const chem::ProteinAtoms*)>;

// Stand-in scoring function: -(hbond count) - 0.5*(hydrophobic count)
// + 10*(clash count), raw counts.
double builtin_score(const chem::ToyMolecule& mol, const chem::ProteinAtoms* pocket);

struct TopNSuccess {
  bool rmsd_ok = false;      // at least one top-N pose with RMSD < 2 A
  bool rmsd_and_valid = false;
};

TopNSuccess top_n_success(std::span<const int> ranked_ids, std::span<const double> rmsd_values,
                          std::span<const bool> pb_valid, int n, double rmsd_threshold = 2.0);

}  // namespace ligflow::eval
