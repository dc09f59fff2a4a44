#include "musinger/core/error.hpp"

namespace musinger {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::Validation: return "Validation";
    case Errc::Range: return "Range";
    case Errc::FrameLength: return "FrameLength";
    case Errc::BadHeader: return "BadHeader";
    case Errc::Corrupt: return "Corrupt";
    case Errc::Unreachable: return "Unreachable";
    case Errc::BadFormat: return "BadFormat";
    case Errc::BadChannel: return "BadChannel";
    case Errc::BadOrder: return "BadOrder";
    case Errc::TooShort: return "TooShort";
    case Errc::EmptyData: return "EmptyData";
    case Errc::MissingCells: return "MissingCells";
    case Errc::DomainError: return "DomainError";
    case Errc::Config: return "Config";
    case Errc::Io: return "Io";
    case Errc::Network: return "Network";
  }
  return "Unknown";
}

}  // namespace musinger
