#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "ligflow/error.hpp"
#include "ligflow/geom.hpp"
#include "ligflow/rng.hpp"

namespace ligflow::chem {

// The supported element set; anything else is filtered upstream.
enum class Element : std::uint8_t { C, H, N, O, F, P, S, Cl, Br, I, B };
inline constexpr int kNumElements = 11;

std::string_view symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view s);
bool is_heteroatom(Element e);  // neither C nor H
int max_valence(Element e, int formal_charge);

enum class Hybridization : std::uint8_t { SP, SP2, SP3, Other };
enum class Chirality : std::uint8_t { None, CW, CCW };

struct Atom {
  Element element = Element::C;
  std::int8_t formal_charge = 0;
  std::uint8_t n_implicit_h = 0;
  bool aromatic = false;
  Hybridization hybridization = Hybridization::Other;
  bool in_ring = false;
  Chirality chirality = Chirality::None;
  // Hydrogen-bond acceptor capability with the conjugation/resonance
  // exclusion applied; set by the corpus generator, derived for sampled
  // molecules (N/O and not aromatic).
  bool hbond_acceptor = false;
};

struct ToyMolecule {
  std::vector<Atom> atoms;
  std::vector<std::uint8_t> bonds;  // n*n symmetric matrix of orders 0..3
  std::vector<Vec3> coords;

  int n_atoms() const { return static_cast<int>(atoms.size()); }
  std::uint8_t bond(int i, int j) const { return bonds[static_cast<std::size_t>(i) * atoms.size() + j]; }
  void set_bond(int i, int j, std::uint8_t order) {
    bonds[static_cast<std::size_t>(i) * atoms.size() + j] = order;
    bonds[static_cast<std::size_t>(j) * atoms.size() + i] = order;
  }
  void resize(int n) {
    atoms.resize(n);
    coords.resize(n);
    bonds.assign(static_cast<std::size_t>(n) * n, 0);
  }
  std::vector<int> neighbors(int i) const;
  int bond_order_sum(int i) const;
};

// Default acceptor-capability rule used for molecules whose atoms were not
// annotated by a corpus generator.
bool derive_acceptor_flag(Element e, bool aromatic);

using AtomTuple = std::tuple<Element, int, int, bool, Hybridization, bool, Chirality>;
AtomTuple atom_tuple(const Atom& a);
Atom atom_from_tuple(const AtomTuple& t);

// Condensed atom typing: the ordered set of observed 7-tuples plus one mask
// token at the last index.
class CondensedVocab {
 public:
  template <typename Iter>
  static CondensedVocab build(Iter begin, Iter end) {
    CondensedVocab v;
    bool any = false;
    for (Iter it = begin; it != end; ++it) {
      any = true;
      for (const Atom& a : it->atoms) v.insert(atom_tuple(a));
    }
    if (!any) fail(Errc::empty_corpus, "condensed vocab needs at least one molecule");
    return v;
  }
  static CondensedVocab build(std::span<const ToyMolecule> corpus) {
    return build(corpus.begin(), corpus.end());
  }
  static CondensedVocab from_tuples(std::vector<AtomTuple> tuples);

  int size() const { return static_cast<int>(tuples_.size()) + 1; }  // + mask
  int mask_token() const { return static_cast<int>(tuples_.size()); }
  int encode(const AtomTuple& t) const;  // throws OutOfVocabulary
  const AtomTuple& decode(int token) const;
  const std::vector<AtomTuple>& tuples() const { return tuples_; }
  std::uint64_t hash() const;

 private:
  void insert(const AtomTuple& t);
  std::vector<AtomTuple> tuples_;
};

std::vector<std::int32_t> encode_atoms(const ToyMolecule& mol, const CondensedVocab& vocab);

enum class PharmKind : std::uint8_t {
  Aromatic, Donor, Acceptor, Hydrophobic, Halogen, PositiveCharge, NegativeCharge
};
inline constexpr int kNumPharmKinds = 7;
std::string_view to_string(PharmKind k);
std::optional<PharmKind> pharm_kind_from_string(std::string_view s);

struct PharmacophoreFeature {
  PharmKind kind;
  Vec3 center;
  std::vector<int> member_atoms;
};

std::vector<PharmacophoreFeature> extract_pharmacophores(const ToyMolecule& mol);

struct ProteinAtoms {
  std::vector<Element> elements;
  std::vector<std::int32_t> atom_names;
  std::vector<std::int32_t> residue_names;
  std::vector<std::int32_t> residue_indices;
  std::vector<Vec3> coords;

  int count() const { return static_cast<int>(elements.size()); }
};

struct NpndeAtoms {
  std::vector<Element> elements;
  std::vector<std::int8_t> charges;
  std::vector<std::tuple<std::int32_t, std::int32_t, std::uint8_t>> bonds;
  std::vector<Vec3> coords;

  int count() const { return static_cast<int>(elements.size()); }
};

struct QualityMetadata {
  std::optional<double> resolution;
  std::optional<double> r;
  std::optional<double> r_free;
  std::optional<double> volume_overlap;
};

struct SystemRecord {
  ToyMolecule ligand;
  ProteinAtoms protein;
  NpndeAtoms npnde;
  QualityMetadata metadata;
};

struct SubsampleConfig {
  double compat_cutoff = 4.0;  // pharmacophore-to-pocket pairing distance
  int max_features = 8;
};

// Uniform k in [1, min(8, eligible)] then a uniform subset of size k. With a
// pocket, eligibility requires a compatible pocket atom within the cutoff.
std::vector<PharmacophoreFeature> subsample_pharmacophores(
    std::span<const PharmacophoreFeature> features, const ProteinAtoms* pocket, Rng& rng,
    const SubsampleConfig& cfg = {});

// Keeps whole residues with any atom within `cutoff` of any ligand atom.
SystemRecord crop_pocket(const SystemRecord& system, double cutoff = 8.0);

std::vector<double> residue_positional_encoding(int residue_index, int dim);

struct NpndeCandidate {
  ToyMolecule mol;
  bool cofactor = false;
  bool ion = false;
  bool artifact = false;
  bool unresolved_atoms = false;
  int covalent_bonds_to_protein = 0;
};

enum class MoleculeRole : std::uint8_t { Ligand, Npnde, Discard };

MoleculeRole classify_npnde(const NpndeCandidate& candidate, const ProteinAtoms& protein,
                            double contact_cutoff = 4.0);

enum class RejectReason : std::uint8_t {
  Resolution, RFactor, RFree, RGap, VolumeOverlap, ContactFraction
};
std::string_view to_string(RejectReason r);

struct FilterResult {
  bool keep = true;
  std::optional<RejectReason> reason;
};

FilterResult filter_system(const SystemRecord& system, double contact_cutoff = 4.0);

// Indices of atoms violating the toy valence table; empty means ok.
std::vector<int> toy_valence_check(const ToyMolecule& mol);

// Exact bond-graph equality under atom relabeling (atom 7-tuples and bond
// orders must map). Exponential in the worst case; intended for toy sizes.
bool topologies_isomorphic(const ToyMolecule& a, const ToyMolecule& b);

}  // namespace ligflow::chem
