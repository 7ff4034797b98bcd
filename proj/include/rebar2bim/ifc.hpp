#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "rebar2bim/bim_build.hpp"
#include "rebar2bim/error.hpp"

namespace rebar2bim {

struct Uint128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
};

/// 22-character IFC GlobalId (base 64 over "0-9A-Za-z_$", most significant
/// sextet first; the leading character carries only the top two bits).
std::string ifc_guid(Uint128 value);

/// 128-bit FNV-1a digest; GlobalIds are derived from it so that identical
/// models always serialize to identical bytes.
Uint128 content_hash(std::string_view data);

/// IFC real literal: at most 12 significant digits, always with a '.'.
std::string ifc_real(double v);

/// Serializes a model as an ISO-10303-21 IFC4 file. Throws E_INVALID_MODEL.
std::string export_ifc(const BimModel& model);

struct IfcCensus {
  std::map<std::string, int> counts;  // entity name -> instances in DATA
  int count(const std::string& name) const {
    auto it = counts.find(name);
    return it == counts.end() ? 0 : it->second;
  }
};

class IfcSyntaxError : public Error {
 public:
  IfcSyntaxError(int line, int column, const std::string& message)
      : Error(ErrorCode::Syntax, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses an ISO-10303-21 exchange file and counts entity instances by name.
/// Throws IfcSyntaxError on malformed structure, duplicate or undefined #ids.
IfcCensus verify_ifc(std::string_view text);

}  // namespace rebar2bim
