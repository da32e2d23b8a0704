#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facex {

/// Failure categories raised by the engine. Each maps to a stable name used
/// in validation findings and machine-readable reports.
enum class Errc {
  io,
  parse,
  duplicate_id,
  unsupported_version,
  invalid_dimensions,
  size_mismatch,
  non_finite,
  value_out_of_range,
  label_out_of_range,
  missing_attribute,
  empty_cell,
  dimension_mismatch,
  empty_input,
  no_region_present,
  invalid_patch_size,
  invalid_region,
  invalid_argument,
  unmapped_attribute,
  unranked_in_mean,
  missing_image,
  image_decode,
  template_missing_region,
  manifest_mismatch,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace facex
