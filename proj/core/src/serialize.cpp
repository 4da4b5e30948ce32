#include "ligflow/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json_convert.hpp"

namespace ligflow::io {

namespace {

constexpr std::array<std::string_view, 4> kHybNames = {"SP", "SP2", "SP3", "Other"};
constexpr std::array<std::string_view, 3> kChiralityNames = {"None", "CW", "CCW"};

std::string_view hyb_name(chem::Hybridization h) { return kHybNames[static_cast<int>(h)]; }
std::string_view chirality_name(chem::Chirality c) { return kChiralityNames[static_cast<int>(c)]; }

chem::Hybridization hyb_from(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (kHybNames[i] == s) return static_cast<chem::Hybridization>(i);
  fail(Errc::parse_error, "hybridization " + s);
}

chem::Chirality chirality_from(const std::string& s) {
  for (int i = 0; i < 3; ++i)
    if (kChiralityNames[i] == s) return static_cast<chem::Chirality>(i);
  fail(Errc::parse_error, "chirality " + s);
}

json coords_json(std::span<const Vec3> coords) {
  json out = json::array();
  for (const Vec3& p : coords) out.push_back({p.x, p.y, p.z});
  return out;
}

std::vector<Vec3> coords_from(const json& j) {
  std::vector<Vec3> out;
  out.reserve(j.size());
  for (const json& p : j) out.push_back({p.at(0), p.at(1), p.at(2)});
  return out;
}

chem::ToyMolecule molecule_from_impl(const json& j, std::string* unsupported) {
  chem::ToyMolecule mol;
  const json& elements = j.at("elements");
  mol.resize(static_cast<int>(elements.size()));
  for (int i = 0; i < mol.n_atoms(); ++i) {
    const std::string sym = elements.at(i);
    const auto e = chem::element_from_symbol(sym);
    if (!e) {
      if (unsupported != nullptr) {
        *unsupported = sym;
        return {};
      }
      fail(Errc::element_filter, "unsupported element " + sym);
    }
    chem::Atom& a = mol.atoms[i];
    a.element = *e;
    a.formal_charge = static_cast<std::int8_t>(j.at("formal_charges").at(i).get<int>());
    a.n_implicit_h = static_cast<std::uint8_t>(j.at("n_implicit_h").at(i).get<int>());
    a.aromatic = j.at("aromatic").at(i).get<bool>();
    a.hybridization = hyb_from(j.at("hybridization").at(i).get<std::string>());
    a.in_ring = j.at("in_ring").at(i).get<bool>();
    a.chirality = chirality_from(j.at("chirality").at(i).get<std::string>());
    a.hbond_acceptor = j.contains("acceptor") ? j.at("acceptor").at(i).get<bool>()
                                              : chem::derive_acceptor_flag(a.element, a.aromatic);
  }
  for (const json& b : j.at("bonds"))
    mol.set_bond(b.at(0), b.at(1), static_cast<std::uint8_t>(b.at(2).get<int>()));
  mol.coords = coords_from(j.at("coords"));
  if (mol.coords.size() != mol.atoms.size()) fail(Errc::parse_error, "coords length");
  return mol;
}

}  // namespace

json molecule_json(const chem::ToyMolecule& mol) {
  json j;
  json elements = json::array(), charges = json::array(), nh = json::array(),
       aromatic = json::array(), hyb = json::array(), ring = json::array(),
       chir = json::array(), acceptor = json::array();
  for (const chem::Atom& a : mol.atoms) {
    elements.push_back(std::string(chem::symbol(a.element)));
    charges.push_back(static_cast<int>(a.formal_charge));
    nh.push_back(static_cast<int>(a.n_implicit_h));
    aromatic.push_back(a.aromatic);
    hyb.push_back(std::string(hyb_name(a.hybridization)));
    ring.push_back(a.in_ring);
    chir.push_back(std::string(chirality_name(a.chirality)));
    acceptor.push_back(a.hbond_acceptor);
  }
  j["elements"] = std::move(elements);
  j["formal_charges"] = std::move(charges);
  j["n_implicit_h"] = std::move(nh);
  j["aromatic"] = std::move(aromatic);
  j["hybridization"] = std::move(hyb);
  j["in_ring"] = std::move(ring);
  j["chirality"] = std::move(chir);
  j["acceptor"] = std::move(acceptor);
  json bonds = json::array();
  for (int i = 0; i < mol.n_atoms(); ++i)
    for (int k = i + 1; k < mol.n_atoms(); ++k)
      if (mol.bond(i, k) > 0) bonds.push_back({i, k, static_cast<int>(mol.bond(i, k))});
  j["bonds"] = std::move(bonds);
  j["coords"] = coords_json(mol.coords);
  return j;
}

chem::ToyMolecule molecule_from(const json& j) { return molecule_from_impl(j, nullptr); }

json system_json(const chem::SystemRecord& sys) {
  json j;
  j["ligand"] = molecule_json(sys.ligand);
  json prot;
  json pe = json::array();
  for (chem::Element e : sys.protein.elements) pe.push_back(std::string(chem::symbol(e)));
  prot["elements"] = std::move(pe);
  prot["atom_names"] = sys.protein.atom_names;
  prot["residue_names"] = sys.protein.residue_names;
  prot["residue_indices"] = sys.protein.residue_indices;
  prot["coords"] = coords_json(sys.protein.coords);
  j["protein"] = std::move(prot);
  json np;
  json ne = json::array();
  for (chem::Element e : sys.npnde.elements) ne.push_back(std::string(chem::symbol(e)));
  np["elements"] = std::move(ne);
  json charges = json::array();
  for (std::int8_t c : sys.npnde.charges) charges.push_back(static_cast<int>(c));
  np["charges"] = std::move(charges);
  json bonds = json::array();
  for (const auto& [a, b, o] : sys.npnde.bonds) bonds.push_back({a, b, static_cast<int>(o)});
  np["bonds"] = std::move(bonds);
  np["coords"] = coords_json(sys.npnde.coords);
  j["npnde"] = std::move(np);
  json md;
  if (sys.metadata.resolution) md["resolution"] = *sys.metadata.resolution;
  if (sys.metadata.r) md["r"] = *sys.metadata.r;
  if (sys.metadata.r_free) md["r_free"] = *sys.metadata.r_free;
  if (sys.metadata.volume_overlap) md["volume_overlap"] = *sys.metadata.volume_overlap;
  j["metadata"] = std::move(md);
  return j;
}

chem::SystemRecord system_from(const json& j) {
  chem::SystemRecord sys;
  sys.ligand = molecule_from(j.at("ligand"));
  if (j.contains("protein")) {
    const json& p = j.at("protein");
    for (const json& e : p.at("elements")) {
      const auto el = chem::element_from_symbol(e.get<std::string>());
      if (!el) fail(Errc::element_filter, "protein element " + e.get<std::string>());
      sys.protein.elements.push_back(*el);
    }
    sys.protein.atom_names = p.at("atom_names").get<std::vector<std::int32_t>>();
    sys.protein.residue_names = p.at("residue_names").get<std::vector<std::int32_t>>();
    sys.protein.residue_indices = p.at("residue_indices").get<std::vector<std::int32_t>>();
    sys.protein.coords = coords_from(p.at("coords"));
  }
  if (j.contains("npnde")) {
    const json& np = j.at("npnde");
    for (const json& e : np.at("elements")) {
      const auto el = chem::element_from_symbol(e.get<std::string>());
      if (!el) fail(Errc::element_filter, "npnde element " + e.get<std::string>());
      sys.npnde.elements.push_back(*el);
    }
    for (const json& c : np.at("charges"))
      sys.npnde.charges.push_back(static_cast<std::int8_t>(c.get<int>()));
    for (const json& b : np.at("bonds"))
      sys.npnde.bonds.emplace_back(b.at(0), b.at(1), static_cast<std::uint8_t>(b.at(2).get<int>()));
    sys.npnde.coords = coords_from(np.at("coords"));
  }
  if (j.contains("metadata")) {
    const json& md = j.at("metadata");
    if (md.contains("resolution")) sys.metadata.resolution = md.at("resolution").get<double>();
    if (md.contains("r")) sys.metadata.r = md.at("r").get<double>();
    if (md.contains("r_free")) sys.metadata.r_free = md.at("r_free").get<double>();
    if (md.contains("volume_overlap"))
      sys.metadata.volume_overlap = md.at("volume_overlap").get<double>();
  }
  return sys;
}

json vocab_json(const chem::CondensedVocab& vocab) {
  json tuples = json::array();
  for (const chem::AtomTuple& t : vocab.tuples()) {
    tuples.push_back({std::string(chem::symbol(std::get<0>(t))), std::get<1>(t), std::get<2>(t),
                      std::get<3>(t), std::string(hyb_name(std::get<4>(t))), std::get<5>(t),
                      std::string(chirality_name(std::get<6>(t)))});
  }
  return json{{"tuples", std::move(tuples)}};
}

chem::CondensedVocab vocab_from(const json& j) {
  std::vector<chem::AtomTuple> tuples;
  for (const json& t : j.at("tuples")) {
    const auto e = chem::element_from_symbol(t.at(0).get<std::string>());
    if (!e) fail(Errc::element_filter, "vocab element " + t.at(0).get<std::string>());
    tuples.emplace_back(*e, t.at(1).get<int>(), t.at(2).get<int>(), t.at(3).get<bool>(),
                        hyb_from(t.at(4).get<std::string>()), t.at(5).get<bool>(),
                        chirality_from(t.at(6).get<std::string>()));
  }
  return chem::CondensedVocab::from_tuples(std::move(tuples));
}

json registry_json(const graph::ModalityRegistry& registry) {
  json mods = json::array();
  for (const graph::ModalityDescriptor& m : registry.descriptors()) {
    json jm;
    jm["id"] = m.id;
    jm["kind"] = m.is_discrete() ? "discrete" : "continuous";
    if (m.is_discrete()) jm["vocab_size"] = m.vocab_size;
    else jm["dim"] = m.dim;
    if (m.on_nodes()) {
      jm["carrier"] = {{"node", std::string(graph::to_string(m.node_carrier()))}};
    } else {
      jm["carrier"] = {{"edge",
                        {std::string(graph::to_string(m.edge_carrier().src)),
                         std::string(graph::to_string(m.edge_carrier().dst))}}};
    }
    mods.push_back(std::move(jm));
  }
  return json{{"modalities", std::move(mods)}};
}

graph::ModalityRegistry registry_from(const json& j) {
  std::vector<graph::ModalityDescriptor> mods;
  for (const json& jm : j.at("modalities")) {
    graph::ModalityDescriptor m;
    m.id = jm.at("id").get<std::string>();
    const std::string kind = jm.at("kind").get<std::string>();
    if (kind == "discrete") {
      m.kind = graph::ModalityKind::Discrete;
      m.vocab_size = jm.at("vocab_size").get<int>();
    } else if (kind == "continuous") {
      m.kind = graph::ModalityKind::Continuous;
      m.dim = jm.at("dim").get<int>();
    } else {
      fail(Errc::parse_error, "modality kind " + kind);
    }
    const json& carrier = jm.at("carrier");
    if (carrier.contains("node")) {
      const auto nt = graph::node_type_from_string(carrier.at("node").get<std::string>());
      if (!nt) fail(Errc::parse_error, "node type in carrier");
      m.carrier = *nt;
    } else {
      const json& e = carrier.at("edge");
      const auto src = graph::node_type_from_string(e.at(0).get<std::string>());
      const auto dst = graph::node_type_from_string(e.at(1).get<std::string>());
      if (!src || !dst) fail(Errc::parse_error, "edge type in carrier");
      m.carrier = graph::EdgeType{*src, *dst};
    }
    mods.push_back(std::move(m));
  }
  return graph::ModalityRegistry(std::move(mods));
}

json task_json(const graph::TaskSpec& task) {
  json j;
  j["name"] = task.name;
  j["generated"] = task.generated;
  j["conditioning"] = task.conditioning;
  j["absent"] = task.absent;
  json assign;
  for (const auto& [id, a] : task.assignments)
    assign[id] = {{"prior", a.prior}, {"coupling", a.coupling}, {"path", a.path}};
  j["assignments"] = std::move(assign);
  return j;
}

graph::TaskSpec task_from(const json& j) {
  graph::TaskSpec t;
  t.name = j.at("name").get<std::string>();
  for (const json& id : j.at("generated")) t.generated.insert(id.get<std::string>());
  for (const json& id : j.at("conditioning")) t.conditioning.insert(id.get<std::string>());
  for (const json& id : j.at("absent")) t.absent.insert(id.get<std::string>());
  if (j.contains("assignments")) {
    for (const auto& [id, a] : j.at("assignments").items()) {
      graph::GeneratedAssignment ga;
      ga.prior = a.at("prior").get<std::string>();
      ga.coupling = a.at("coupling").get<std::string>();
      ga.path = a.at("path").get<std::string>();
      t.assignments[id] = std::move(ga);
    }
  }
  return t;
}

json net_config_json(const net::NetConfig& cfg) {
  return json{{"d_s", cfg.d_s},
              {"d_v", cfg.d_v},
              {"d_e", cfg.d_e},
              {"n_blocks", cfg.n_blocks},
              {"convs_per_block", cfg.convs_per_block},
              {"time_dim", cfg.time_dim},
              {"task_dim", cfg.task_dim},
              {"type_emb_dim", cfg.type_emb_dim},
              {"residue_pe_dim", cfg.residue_pe_dim},
              {"rbf", {{"n_bases", cfg.rbf.n_bases}, {"r_max", cfg.rbf.r_max}}}};
}

net::NetConfig net_config_from(const json& j) {
  net::NetConfig cfg;
  cfg.d_s = j.value("d_s", cfg.d_s);
  cfg.d_v = j.value("d_v", cfg.d_v);
  cfg.d_e = j.value("d_e", cfg.d_e);
  cfg.n_blocks = j.value("n_blocks", cfg.n_blocks);
  cfg.convs_per_block = j.value("convs_per_block", cfg.convs_per_block);
  cfg.time_dim = j.value("time_dim", cfg.time_dim);
  cfg.task_dim = j.value("task_dim", cfg.task_dim);
  cfg.type_emb_dim = j.value("type_emb_dim", cfg.type_emb_dim);
  cfg.residue_pe_dim = j.value("residue_pe_dim", cfg.residue_pe_dim);
  if (j.contains("rbf")) {
    cfg.rbf.n_bases = j.at("rbf").value("n_bases", cfg.rbf.n_bases);
    cfg.rbf.r_max = j.at("rbf").value("r_max", cfg.rbf.r_max);
  }
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  out << content;
  if (!out) fail(Errc::io_error, "short write to " + path.string());
}

namespace {

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Errc::parse_error, "malformed JSON");
  return j;
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path,
                          T (*from)(const std::string&)) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(from(line));
  }
  return out;
}

}  // namespace

std::string molecule_to_json_line(const chem::ToyMolecule& mol) {
  return molecule_json(mol).dump();
}

chem::ToyMolecule molecule_from_json_line(const std::string& line) {
  return molecule_from(parse(line));
}

ParsedMolecule try_parse_molecule(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) return {std::nullopt, "malformed JSON"};
  ParsedMolecule out;
  std::string unsupported;
  try {
    chem::ToyMolecule mol = molecule_from_impl(j, &unsupported);
    if (!unsupported.empty()) return {std::nullopt, "element " + unsupported};
    out.molecule = std::move(mol);
  } catch (const Error& e) {
    return {std::nullopt, e.what()};
  } catch (const json::exception& e) {
    return {std::nullopt, e.what()};
  }
  return out;
}

std::vector<chem::ToyMolecule> read_molecules_jsonl(const std::filesystem::path& path) {
  return read_jsonl<chem::ToyMolecule>(path, molecule_from_json_line);
}

void write_molecules_jsonl(std::span<const chem::ToyMolecule> mols,
                           const std::filesystem::path& path) {
  std::string out;
  for (const chem::ToyMolecule& m : mols) {
    out += molecule_to_json_line(m);
    out += '\n';
  }
  write_file(path, out);
}

std::string system_to_json_line(const chem::SystemRecord& sys) { return system_json(sys).dump(); }

chem::SystemRecord system_from_json_line(const std::string& line) {
  return system_from(parse(line));
}

std::vector<chem::SystemRecord> read_systems_jsonl(const std::filesystem::path& path) {
  return read_jsonl<chem::SystemRecord>(path, system_from_json_line);
}

void write_systems_jsonl(std::span<const chem::SystemRecord> systems,
                         const std::filesystem::path& path) {
  std::string out;
  for (const chem::SystemRecord& s : systems) {
    out += system_to_json_line(s);
    out += '\n';
  }
  write_file(path, out);
}

void write_vocab(const chem::CondensedVocab& vocab, const std::filesystem::path& path) {
  write_file(path, vocab_json(vocab).dump(2) + "\n");
}

chem::CondensedVocab read_vocab(const std::filesystem::path& path) {
  return vocab_from(parse(read_file(path)));
}

std::string registry_to_json(const graph::ModalityRegistry& registry) {
  return registry_json(registry).dump(2);
}

graph::ModalityRegistry registry_from_json(const std::string& text) {
  return registry_from(parse(text));
}

std::string task_to_json(const graph::TaskSpec& task) { return task_json(task).dump(2); }

graph::TaskSpec task_from_json(const std::string& text) { return task_from(parse(text)); }

}  // namespace ligflow::io
