#pragma once

// Report serialisation. JSON layout:
//
//   {"meta": {"seed": ..., "version": ..., "timestamp": ...},
//    "reports": [{"type": "certificate" | "stability" | "nle", ...}, ...]}
//
// Infinite ratios are written as the string "inf". Output is byte-stable for
// identical reports and meta.

#include <cstdint>
#include <string>
#include <vector>

#include "bsde/harness.hpp"

namespace bsde::report {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kFixedTimestamp = "1970-01-01T00:00:00Z";

enum class Format { json, csv };

struct Meta {
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string timestamp = kFixedTimestamp;
};

/// Current UTC time, ISO 8601.
std::string now_timestamp();

Format format_from_string(const std::string& s);

std::string render(const std::vector<harness::Report>& reports, const Meta& meta, Format format);

/// Writes render(...) to `path`, or to stdout when path is "-". I/O failures
/// throw Error naming the path.
void emit_report(const std::vector<harness::Report>& reports, const Meta& meta,
                 const std::string& path, Format format);

struct Parsed {
  Meta meta;
  std::vector<harness::Report> reports;
};

/// Inverse of render(..., Format::json).
Parsed parse_json(const std::string& text);

}  // namespace bsde::report
