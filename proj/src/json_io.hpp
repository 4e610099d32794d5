// JSON parsing that remembers the source line of every value.
#pragma once

#include <map>
#include <string>

#include "json.hpp"

namespace vantage::detail {

struct LocatedJson {
  nlohmann::json doc;
  /// JSON pointer -> 1-based line where the value starts.
  std::map<std::string, std::size_t> lines;

  /// Line of `pointer`, or of its nearest recorded ancestor.
  std::size_t line_of(std::string pointer) const;
};

/// Throws ParseError(source, line, ...) on malformed text.
LocatedJson parse_located(const std::string& text, const std::string& source);

}  // namespace vantage::detail
