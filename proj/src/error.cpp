#include "facex/error.hpp"

namespace facex {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "io";
    case Errc::parse: return "parse";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::unsupported_version: return "unsupported_version";
    case Errc::invalid_dimensions: return "invalid_dimensions";
    case Errc::size_mismatch: return "size_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::value_out_of_range: return "value_out_of_range";
    case Errc::label_out_of_range: return "label_out_of_range";
    case Errc::missing_attribute: return "missing_attribute";
    case Errc::empty_cell: return "empty_cell";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::no_region_present: return "no_region_present";
    case Errc::invalid_patch_size: return "invalid_patch_size";
    case Errc::invalid_region: return "invalid_region";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unmapped_attribute: return "unmapped_attribute";
    case Errc::unranked_in_mean: return "unranked_in_mean";
    case Errc::missing_image: return "missing_image";
    case Errc::image_decode: return "image_decode";
    case Errc::template_missing_region: return "template_missing_region";
    case Errc::manifest_mismatch: return "manifest_mismatch";
  }
  return "unknown";
}

}  // namespace facex
