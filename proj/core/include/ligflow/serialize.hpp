#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ligflow/chem.hpp"
#include "ligflow/hetgraph.hpp"
#include "ligflow/net.hpp"

namespace ligflow::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Molecules and systems use a line-oriented JSON format: one record per line.
std::string molecule_to_json_line(const chem::ToyMolecule& mol);
chem::ToyMolecule molecule_from_json_line(const std::string& line);

// Lenient parse used by ingestion: records with unsupported element symbols
// come back with a skip reason instead of throwing.
struct ParsedMolecule {
  std::optional<chem::ToyMolecule> molecule;
  std::string skip_reason;
};
ParsedMolecule try_parse_molecule(const std::string& line);

std::vector<chem::ToyMolecule> read_molecules_jsonl(const std::filesystem::path& path);
void write_molecules_jsonl(std::span<const chem::ToyMolecule> mols,
                           const std::filesystem::path& path);

std::string system_to_json_line(const chem::SystemRecord& sys);
chem::SystemRecord system_from_json_line(const std::string& line);
std::vector<chem::SystemRecord> read_systems_jsonl(const std::filesystem::path& path);
void write_systems_jsonl(std::span<const chem::SystemRecord> systems,
                         const std::filesystem::path& path);

void write_vocab(const chem::CondensedVocab& vocab, const std::filesystem::path& path);
chem::CondensedVocab read_vocab(const std::filesystem::path& path);

std::string registry_to_json(const graph::ModalityRegistry& registry);
graph::ModalityRegistry registry_from_json(const std::string& text);

std::string task_to_json(const graph::TaskSpec& task);
graph::TaskSpec task_from_json(const std::string& text);

}  // namespace ligflow::io
