#pragma once

// Internal nlohmann::json converters shared by serialize.cpp, train.cpp and
// the CLI. Not installed; the public API lives in ligflow/serialize.hpp.

#include <json.hpp>

#include "ligflow/chem.hpp"
#include "ligflow/hetgraph.hpp"
#include "ligflow/net.hpp"

namespace ligflow::io {

using json = nlohmann::json;

json molecule_json(const chem::ToyMolecule& mol);
chem::ToyMolecule molecule_from(const json& j);

json system_json(const chem::SystemRecord& sys);
chem::SystemRecord system_from(const json& j);

json vocab_json(const chem::CondensedVocab& vocab);
chem::CondensedVocab vocab_from(const json& j);

json registry_json(const graph::ModalityRegistry& registry);
graph::ModalityRegistry registry_from(const json& j);

json task_json(const graph::TaskSpec& task);
graph::TaskSpec task_from(const json& j);

json net_config_json(const net::NetConfig& cfg);
net::NetConfig net_config_from(const json& j);

}  // namespace ligflow::io
