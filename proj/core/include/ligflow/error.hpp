#pragma once

#include <stdexcept>
#include <string>

namespace ligflow {

enum class Errc {
  // hetgraph
  duplicate_modality,
  overlapping_sets,
  uncovered_modality,
  missing_prior_assignment,
  empty_ligand,
  unknown_modality,
  // chem
  empty_corpus,
  out_of_vocabulary,
  no_eligible_features,
  bad_dimension,
  missing_metadata,
  // flow
  size_mismatch,
  invalid_input,
  missing_weight,
  past_terminal,
  denoiser_contract,
  // net
  missing_modality,
  degenerate_edge,
  // diff
  not_scalar,
  // train
  non_finite_loss,
  registry_mismatch,
  corrupt_checkpoint,
  // store / io
  io_error,
  index_error,
  element_filter,
  parse_error,
  unknown_task,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ligflow
