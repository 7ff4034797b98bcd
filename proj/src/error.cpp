#include "rebar2bim/error.hpp"

namespace rebar2bim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Schema: return "E_SCHEMA";
    case ErrorCode::DimMismatch: return "E_DIM_MISMATCH";
    case ErrorCode::NonFinite: return "E_NONFINITE";
    case ErrorCode::DepthOob: return "E_DEPTH_OOB";
    case ErrorCode::Oob: return "E_OOB";
    case ErrorCode::Border: return "E_BORDER";
    case ErrorCode::Checksum: return "E_CHECKSUM";
    case ErrorCode::Ambiguous: return "E_AMBIGUOUS";
    case ErrorCode::InvalidBbox: return "E_INVALID_BBOX";
    case ErrorCode::BehindCamera: return "E_BEHIND_CAMERA";
    case ErrorCode::SingularK: return "E_SINGULAR_K";
    case ErrorCode::NoHit: return "E_NO_HIT";
    case ErrorCode::IdConflict: return "E_ID_CONFLICT";
    case ErrorCode::MissingDirection: return "E_MISSING_DIRECTION";
    case ErrorCode::ExtraScans: return "E_EXTRA_SCANS";
    case ErrorCode::EmptyWindow: return "E_EMPTY_WINDOW";
    case ErrorCode::DepthExceedsThickness: return "E_DEPTH_EXCEEDS_THICKNESS";
    case ErrorCode::UnlinkedScan: return "E_UNLINKED_SCAN";
    case ErrorCode::DanglingLink: return "E_DANGLING_LINK";
    case ErrorCode::DuplicateLink: return "E_DUPLICATE_LINK";
    case ErrorCode::InvalidModel: return "E_INVALID_MODEL";
    case ErrorCode::Syntax: return "E_SYNTAX";
    case ErrorCode::LayoutOob: return "E_LAYOUT_OOB";
    case ErrorCode::FiducialNotVisible: return "E_FIDUCIAL_NOT_VISIBLE";
    case ErrorCode::Io: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace rebar2bim
