#include "fallcloud/error.hpp"

namespace fallcloud {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidSample: return "invalid sample";
    case Errc::EmptyInput: return "empty input";
    case Errc::TooShort: return "too short";
    case Errc::Ingest: return "ingest error";
    case Errc::UnknownAdapter: return "unknown adapter";
    case Errc::CannotFit: return "cannot fit";
    case Errc::Parameter: return "parameter error";
    case Errc::Contract: return "contract error";
    case Errc::DegenerateLeaf: return "degenerate leaf";
    case Errc::DegenerateSplit: return "degenerate split";
    case Errc::CannotTrain: return "cannot train";
    case Errc::CannotEvaluate: return "cannot evaluate";
    case Errc::Incompatible: return "model/feature incompatibility";
    case Errc::Truncated: return "truncated";
    case Errc::BadMagic: return "bad magic";
    case Errc::VersionMismatch: return "unsupported version";
    case Errc::ChecksumMismatch: return "checksum mismatch";
    case Errc::Corrupt: return "corrupt data";
    case Errc::Io: return "i/o error";
    case Errc::Protocol: return "protocol error";
  }
  return "unknown error";
}

}  // namespace fallcloud
