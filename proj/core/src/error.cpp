#include "ligflow/error.hpp"

namespace ligflow {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::duplicate_modality: return "DuplicateModality";
    case Errc::overlapping_sets: return "OverlappingSets";
    case Errc::uncovered_modality: return "UncoveredModality";
    case Errc::missing_prior_assignment: return "MissingPriorAssignment";
    case Errc::empty_ligand: return "EmptyLigand";
    case Errc::unknown_modality: return "UnknownModality";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::out_of_vocabulary: return "OutOfVocabulary";
    case Errc::no_eligible_features: return "NoEligibleFeatures";
    case Errc::bad_dimension: return "BadDimension";
    case Errc::missing_metadata: return "MissingMetadata";
    case Errc::size_mismatch: return "SizeMismatch";
    case Errc::invalid_input: return "InvalidInput";
    case Errc::missing_weight: return "MissingWeight";
    case Errc::past_terminal: return "PastTerminal";
    case Errc::denoiser_contract: return "DenoiserContract";
    case Errc::missing_modality: return "MissingModality";
    case Errc::degenerate_edge: return "DegenerateEdge";
    case Errc::not_scalar: return "NotScalar";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::registry_mismatch: return "RegistryMismatch";
    case Errc::corrupt_checkpoint: return "CorruptCheckpoint";
    case Errc::io_error: return "IoError";
    case Errc::index_error: return "IndexError";
    case Errc::element_filter: return "ElementFilter";
    case Errc::parse_error: return "ParseError";
    case Errc::unknown_task: return "UnknownTask";
  }
  return "UnknownError";
}

}  // namespace ligflow
