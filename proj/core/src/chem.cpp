#include "ligflow/chem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace ligflow::chem {

namespace {

constexpr std::array<std::string_view, kNumElements> kSymbols = {
    "C", "H", "N", "O", "F", "P", "S", "Cl", "Br", "I", "B"};

}  // namespace

std::string_view symbol(Element e) { return kSymbols[static_cast<int>(e)]; }

std::optional<Element> element_from_symbol(std::string_view s) {
  for (int i = 0; i < kNumElements; ++i)
    if (kSymbols[i] == s) return static_cast<Element>(i);
  return std::nullopt;
}

bool is_heteroatom(Element e) { return e != Element::C && e != Element::H; }

int max_valence(Element e, int formal_charge) {
  switch (e) {
    case Element::C: return 4;
    case Element::H: return 1;
    case Element::N: return 3 + formal_charge;
    case Element::O: return 2 + formal_charge;
    case Element::F:
    case Element::Cl:
    case Element::Br:
    case Element::I: return 1;
    case Element::S: return 6;
    case Element::P: return 5;
    case Element::B: return 3;
  }
  return 0;
}

std::vector<int> ToyMolecule::neighbors(int i) const {
  std::vector<int> out;
  for (int j = 0; j < n_atoms(); ++j)
    if (j != i && bond(i, j) > 0) out.push_back(j);
  return out;
}

int ToyMolecule::bond_order_sum(int i) const {
  int s = 0;
  for (int j = 0; j < n_atoms(); ++j)
    if (j != i) s += bond(i, j);
  return s;
}

bool derive_acceptor_flag(Element e, bool aromatic) {
  return (e == Element::N || e == Element::O) && !aromatic;
}

AtomTuple atom_tuple(const Atom& a) {
  return {a.element, a.formal_charge, a.n_implicit_h, a.aromatic, a.hybridization, a.in_ring,
          a.chirality};
}

Atom atom_from_tuple(const AtomTuple& t) {
  Atom a;
  a.element = std::get<0>(t);
  a.formal_charge = static_cast<std::int8_t>(std::get<1>(t));
  a.n_implicit_h = static_cast<std::uint8_t>(std::get<2>(t));
  a.aromatic = std::get<3>(t);
  a.hybridization = std::get<4>(t);
  a.in_ring = std::get<5>(t);
  a.chirality = std::get<6>(t);
  a.hbond_acceptor = derive_acceptor_flag(a.element, a.aromatic);
  return a;
}

CondensedVocab CondensedVocab::from_tuples(std::vector<AtomTuple> tuples) {
  CondensedVocab v;
  for (const AtomTuple& t : tuples) v.insert(t);
  return v;
}

void CondensedVocab::insert(const AtomTuple& t) {
  if (std::ranges::find(tuples_, t) == tuples_.end()) tuples_.push_back(t);
}

int CondensedVocab::encode(const AtomTuple& t) const {
  auto it = std::ranges::find(tuples_, t);
  if (it == tuples_.end()) fail(Errc::out_of_vocabulary, std::string(symbol(std::get<0>(t))));
  return static_cast<int>(it - tuples_.begin());
}

const AtomTuple& CondensedVocab::decode(int token) const {
  if (token < 0 || token >= static_cast<int>(tuples_.size()))
    fail(Errc::index_error, "vocab token " + std::to_string(token));
  return tuples_[token];
}

std::uint64_t CondensedVocab::hash() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (const AtomTuple& t : tuples_) {
    mix(static_cast<std::uint64_t>(std::get<0>(t)));
    mix(static_cast<std::uint64_t>(std::get<1>(t) + 16));
    mix(static_cast<std::uint64_t>(std::get<2>(t)));
    mix(std::get<3>(t) ? 1 : 0);
    mix(static_cast<std::uint64_t>(std::get<4>(t)));
    mix(std::get<5>(t) ? 1 : 0);
    mix(static_cast<std::uint64_t>(std::get<6>(t)));
  }
  return h;
}

std::vector<std::int32_t> encode_atoms(const ToyMolecule& mol, const CondensedVocab& vocab) {
  std::vector<std::int32_t> out;
  out.reserve(mol.atoms.size());
  for (const Atom& a : mol.atoms) out.push_back(vocab.encode(atom_tuple(a)));
  return out;
}

std::string_view to_string(PharmKind k) {
  switch (k) {
    case PharmKind::Aromatic: return "aromatic";
    case PharmKind::Donor: return "donor";
    case PharmKind::Acceptor: return "acceptor";
    case PharmKind::Hydrophobic: return "hydrophobic";
    case PharmKind::Halogen: return "halogen";
    case PharmKind::PositiveCharge: return "positive";
    case PharmKind::NegativeCharge: return "negative";
  }
  return "?";
}

std::optional<PharmKind> pharm_kind_from_string(std::string_view s) {
  for (int i = 0; i < kNumPharmKinds; ++i)
    if (to_string(static_cast<PharmKind>(i)) == s) return static_cast<PharmKind>(i);
  return std::nullopt;
}

namespace {

PharmacophoreFeature make_feature(PharmKind kind, std::vector<int> members,
                                  const ToyMolecule& mol) {
  PharmacophoreFeature f;
  f.kind = kind;
  f.member_atoms = std::move(members);
  Vec3 c{};
  for (int i : f.member_atoms) c += mol.coords[i];
  c *= 1.0 / static_cast<double>(f.member_atoms.size());
  f.center = c;
  return f;
}

// All unique aromatic rings of size 5 or 6, found by bounded DFS.
std::vector<std::vector<int>> aromatic_rings(const ToyMolecule& mol) {
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> rings;
  const int n = mol.n_atoms();
  std::vector<int> path;

  auto dfs = [&](auto&& self, int start, int current) -> void {
    if (path.size() > 6) return;
    for (int next : mol.neighbors(current)) {
      if (!mol.atoms[next].aromatic) continue;
      if (next == start && path.size() >= 5) {
        std::vector<int> key = path;
        std::ranges::sort(key);
        if (seen.insert(key).second) rings.push_back(path);
        continue;
      }
      if (next <= start) continue;  // canonical start avoids duplicates
      if (std::ranges::find(path, next) != path.end()) continue;
      path.push_back(next);
      self(self, start, next);
      path.pop_back();
    }
  };

  for (int i = 0; i < n; ++i) {
    if (!mol.atoms[i].aromatic) continue;
    path = {i};
    dfs(dfs, i, i);
  }
  return rings;
}

bool is_hydrophobic_atom(const ToyMolecule& mol, int i) {
  const Atom& a = mol.atoms[i];
  if ((a.element != Element::C && a.element != Element::S) || a.aromatic) return false;
  for (int j : mol.neighbors(i))
    if (is_heteroatom(mol.atoms[j].element) && mol.atoms[j].element != Element::S) return false;
  return true;
}

}  // namespace

std::vector<PharmacophoreFeature> extract_pharmacophores(const ToyMolecule& mol) {
  std::vector<PharmacophoreFeature> out;

  for (const std::vector<int>& ring : aromatic_rings(mol))
    out.push_back(make_feature(PharmKind::Aromatic, ring, mol));

  for (int i = 0; i < mol.n_atoms(); ++i) {
    const Atom& a = mol.atoms[i];
    const Element e = a.element;
    if ((e == Element::N || e == Element::O || e == Element::S) && a.n_implicit_h >= 1)
      out.push_back(make_feature(PharmKind::Donor, {i}, mol));
    if ((e == Element::N || e == Element::O) && a.hbond_acceptor)
      out.push_back(make_feature(PharmKind::Acceptor, {i}, mol));
    if (e == Element::F || e == Element::Cl || e == Element::Br || e == Element::I) {
      const auto nbrs = mol.neighbors(i);
      if (std::ranges::any_of(nbrs, [&](int j) { return mol.atoms[j].element == Element::C; }))
        out.push_back(make_feature(PharmKind::Halogen, {i}, mol));
    }
    if (a.formal_charge > 0) out.push_back(make_feature(PharmKind::PositiveCharge, {i}, mol));
    if (a.formal_charge < 0) out.push_back(make_feature(PharmKind::NegativeCharge, {i}, mol));
  }

  // Hydrophobic groups: connected components of nonpolar non-aromatic C/S.
  std::vector<bool> eligible(mol.n_atoms());
  for (int i = 0; i < mol.n_atoms(); ++i) eligible[i] = is_hydrophobic_atom(mol, i);
  std::vector<bool> visited(mol.n_atoms(), false);
  for (int i = 0; i < mol.n_atoms(); ++i) {
    if (!eligible[i] || visited[i]) continue;
    std::vector<int> component, stack{i};
    visited[i] = true;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      component.push_back(cur);
      for (int j : mol.neighbors(cur)) {
        if (eligible[j] && !visited[j]) {
          visited[j] = true;
          stack.push_back(j);
        }
      }
    }
    std::ranges::sort(component);
    out.push_back(make_feature(PharmKind::Hydrophobic, component, mol));
  }
  return out;
}

namespace {

// Toy pocket-atom pairing used to decide whether a ligand feature points at
// something it could interact with.
bool pocket_atom_compatible(PharmKind kind, Element pocket_element) {
  switch (kind) {
    case PharmKind::Donor:
    case PharmKind::Acceptor:
    case PharmKind::Halogen:
      return pocket_element == Element::N || pocket_element == Element::O;
    case PharmKind::Hydrophobic:
    case PharmKind::Aromatic:
      return pocket_element == Element::C;
    case PharmKind::PositiveCharge:
      return pocket_element == Element::O;
    case PharmKind::NegativeCharge:
      return pocket_element == Element::N;
  }
  return false;
}

}  // namespace

std::vector<PharmacophoreFeature> subsample_pharmacophores(
    std::span<const PharmacophoreFeature> features, const ProteinAtoms* pocket, Rng& rng,
    const SubsampleConfig& cfg) {
  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(features.size()); ++i) {
    if (pocket == nullptr) {
      eligible.push_back(i);
      continue;
    }
    const double c2 = cfg.compat_cutoff * cfg.compat_cutoff;
    for (int j = 0; j < pocket->count(); ++j) {
      if (pocket_atom_compatible(features[i].kind, pocket->elements[j]) &&
          norm2(features[i].center - pocket->coords[j]) <= c2) {
        eligible.push_back(i);
        break;
      }
    }
  }
  if (eligible.empty()) fail(Errc::no_eligible_features, "pharmacophore subsampling");

  const int max_k = std::min<int>(cfg.max_features, static_cast<int>(eligible.size()));
  const int k = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_k)));
  // Partial Fisher-Yates gives a uniform subset of size k.
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(k);
  std::ranges::sort(eligible);

  std::vector<PharmacophoreFeature> out;
  out.reserve(k);
  for (int i : eligible) out.push_back(features[i]);
  return out;
}

SystemRecord crop_pocket(const SystemRecord& system, double cutoff) {
  if (system.ligand.n_atoms() == 0) fail(Errc::empty_ligand, "crop_pocket");
  const double c2 = cutoff * cutoff;

  std::set<std::int32_t> kept_residues;
  for (int i = 0; i < system.protein.count(); ++i) {
    for (const Vec3& lp : system.ligand.coords) {
      if (norm2(system.protein.coords[i] - lp) <= c2) {
        kept_residues.insert(system.protein.residue_indices[i]);
        break;
      }
    }
  }

  SystemRecord out = system;
  ProteinAtoms cropped;
  for (int i = 0; i < system.protein.count(); ++i) {
    if (!kept_residues.count(system.protein.residue_indices[i])) continue;
    cropped.elements.push_back(system.protein.elements[i]);
    cropped.atom_names.push_back(system.protein.atom_names[i]);
    cropped.residue_names.push_back(system.protein.residue_names[i]);
    cropped.residue_indices.push_back(system.protein.residue_indices[i]);
    cropped.coords.push_back(system.protein.coords[i]);
  }
  out.protein = std::move(cropped);
  return out;
}

std::vector<double> residue_positional_encoding(int residue_index, int dim) {
  if (dim <= 0 || dim % 2 != 0) fail(Errc::bad_dimension, "encoding dim must be even");
  std::vector<double> out(dim);
  const double pos = static_cast<double>(residue_index);
  for (int k = 0; k < dim / 2; ++k) {
    const double freq = std::pow(10000.0, -2.0 * k / dim);
    out[2 * k] = std::sin(pos * freq);
    out[2 * k + 1] = std::cos(pos * freq);
  }
  return out;
}

MoleculeRole classify_npnde(const NpndeCandidate& candidate, const ProteinAtoms& protein,
                            double contact_cutoff) {
  if (candidate.cofactor || candidate.ion || candidate.artifact) return MoleculeRole::Npnde;
  if (candidate.mol.n_atoms() > 120) return MoleculeRole::Npnde;
  if (candidate.unresolved_atoms) return MoleculeRole::Npnde;
  if (candidate.covalent_bonds_to_protein > 1) return MoleculeRole::Npnde;

  const double c2 = contact_cutoff * contact_cutoff;
  std::set<std::int32_t> contacted;
  for (int i = 0; i < protein.count(); ++i) {
    for (const Vec3& p : candidate.mol.coords) {
      if (norm2(protein.coords[i] - p) <= c2) {
        contacted.insert(protein.residue_indices[i]);
        break;
      }
    }
  }
  if (contacted.empty()) return MoleculeRole::Npnde;
  return MoleculeRole::Ligand;
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Resolution: return "Resolution";
    case RejectReason::RFactor: return "RFactor";
    case RejectReason::RFree: return "RFree";
    case RejectReason::RGap: return "RGap";
    case RejectReason::VolumeOverlap: return "VolumeOverlap";
    case RejectReason::ContactFraction: return "ContactFraction";
  }
  return "?";
}

FilterResult filter_system(const SystemRecord& system, double contact_cutoff) {
  const QualityMetadata& m = system.metadata;
  if (!m.resolution || !m.r || !m.r_free || !m.volume_overlap)
    fail(Errc::missing_metadata, "filter_system");

  auto reject = [](RejectReason r) { return FilterResult{false, r}; };
  // "Worse than" thresholds are strict: a system exactly at a threshold is kept.
  if (*m.resolution > 3.5) return reject(RejectReason::Resolution);
  if (*m.r > 0.40) return reject(RejectReason::RFactor);
  if (*m.r_free > 0.45) return reject(RejectReason::RFree);
  if (std::abs(*m.r - *m.r_free) > 0.075) return reject(RejectReason::RGap);
  if (*m.volume_overlap > 0.075) return reject(RejectReason::VolumeOverlap);

  const double c2 = contact_cutoff * contact_cutoff;
  int in_contact = 0;
  for (const Vec3& lp : system.ligand.coords) {
    for (int i = 0; i < system.protein.count(); ++i) {
      if (norm2(system.protein.coords[i] - lp) <= c2) {
        ++in_contact;
        break;
      }
    }
  }
  const double fraction =
      system.ligand.n_atoms() > 0
          ? static_cast<double>(in_contact) / system.ligand.n_atoms()
          : 0.0;
  if (fraction < 0.35) return reject(RejectReason::ContactFraction);
  return {true, std::nullopt};
}

std::vector<int> toy_valence_check(const ToyMolecule& mol) {
  std::vector<int> violations;
  for (int i = 0; i < mol.n_atoms(); ++i) {
    const Atom& a = mol.atoms[i];
    const int used = mol.bond_order_sum(i) + a.n_implicit_h +
                     std::abs(std::min<int>(a.formal_charge, 0));
    if (used > max_valence(a.element, a.formal_charge)) violations.push_back(i);
  }
  return violations;
}

namespace {

bool isomorphism_search(const ToyMolecule& a, const ToyMolecule& b, std::vector<int>& map,
                        std::vector<bool>& used, int i) {
  const int n = a.n_atoms();
  if (i == n) return true;
  for (int j = 0; j < n; ++j) {
    if (used[j] || atom_tuple(a.atoms[i]) != atom_tuple(b.atoms[j])) continue;
    bool ok = true;
    for (int k = 0; k < i; ++k) {
      if (a.bond(i, k) != b.bond(j, map[k])) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    map[i] = j;
    used[j] = true;
    if (isomorphism_search(a, b, map, used, i + 1)) return true;
    used[j] = false;
  }
  return false;
}

}  // namespace

bool topologies_isomorphic(const ToyMolecule& a, const ToyMolecule& b) {
  if (a.n_atoms() != b.n_atoms()) return false;
  auto signature = [](const ToyMolecule& m) {
    std::vector<AtomTuple> sig;
    sig.reserve(m.atoms.size());
    for (const Atom& at : m.atoms) sig.push_back(atom_tuple(at));
    std::ranges::sort(sig);
    return sig;
  };
  if (signature(a) != signature(b)) return false;
  std::vector<int> map(a.n_atoms(), -1);
  std::vector<bool> used(a.n_atoms(), false);
  return isomorphism_search(a, b, map, used, 0);
}

}  // namespace ligflow::chem
