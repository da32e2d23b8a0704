#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace facex {

/// Decimal text with 9 significant digits ("%.9g").
[[nodiscard]] std::string format_number(double value);

/// Rounds to 9 significant digits; the shortest round-trip representation
/// of the result is the serialized form used in every output document.
[[nodiscard]] double round_sig9(double value);

[[nodiscard]] std::string base64_encode(std::span<const std::byte> bytes);

}  // namespace facex
