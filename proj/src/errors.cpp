#include "das/errors.hpp"

namespace das {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingInput: return "MissingInput";
    case Errc::DomainError: return "DomainError";
    case Errc::InterventionOnInput: return "InterventionOnInput";
    case Errc::OverlappingTargets: return "OverlappingTargets";
    case Errc::UnknownVariable: return "UnknownVariable";
    case Errc::EnumerationTooLarge: return "EnumerationTooLarge";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonScalarLoss: return "NonScalarLoss";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::NotOrthogonal: return "NotOrthogonal";
    case Errc::NotAntichain: return "NotAntichain";
    case Errc::BlockCountMismatch: return "BlockCountMismatch";
    case Errc::NoAdmissiblePlacement: return "NoAdmissiblePlacement";
    case Errc::BlockTooSmall: return "BlockTooSmall";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::Io: return "Io";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace das
