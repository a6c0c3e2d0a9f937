#pragma once

// yaml-cpp adapters shared by the schedule, backbone-spec and config readers.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include "tokred/errors.h"

namespace tokred::detail {

inline std::size_t line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.is_null() ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

inline std::string at_line(std::size_t line) {
  return line == 0 ? std::string() : " (line " + std::to_string(line) + ")";
}

inline YAML::Node load_document(std::string_view text, std::string_view what) {
  try {
    YAML::Node root = YAML::Load(std::string(text));
    if (!root.IsMap()) {
      throw ParseError(std::string(what) + ": document must be a mapping", line_of(root), "");
    }
    return root;
  } catch (const YAML::Exception& e) {
    const std::size_t line = e.mark.is_null() ? 0 : static_cast<std::size_t>(e.mark.line) + 1;
    throw ParseError(std::string(what) + ": " + e.msg + at_line(line), line, "");
  }
}

inline void reject_unknown(const YAML::Node& map, std::initializer_list<std::string_view> known,
                           std::string_view what) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    bool found = false;
    for (auto k : known) found = found || k == key;
    if (!found) {
      const std::size_t line = line_of(kv.first);
      throw ParseError(std::string(what) + ": unknown field '" + key + "'" + at_line(line), line,
                       key);
    }
  }
}

template <class T>
T convert(const YAML::Node& node, std::string_view field, std::string_view what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    const std::size_t line = line_of(node);
    throw ParseError(std::string(what) + ": field '" + std::string(field) + "' has invalid value" +
                         at_line(line),
                     line, std::string(field));
  }
}

inline std::uint64_t convert_count(const YAML::Node& node, std::string_view field,
                                   std::string_view what) {
  const auto text = convert<std::string>(node, field, what);
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    const std::size_t line = line_of(node);
    throw ParseError(std::string(what) + ": field '" + std::string(field) +
                         "' must be a non-negative integer" + at_line(line),
                     line, std::string(field));
  }
  return convert<std::uint64_t>(node, field, what);
}

inline YAML::Node require(const YAML::Node& map, std::string_view field, std::string_view what) {
  YAML::Node node = map[std::string(field)];
  if (!node) {
    const std::size_t line = line_of(map);
    throw ParseError(std::string(what) + ": missing field '" + std::string(field) + "'" +
                         at_line(line),
                     line, std::string(field));
  }
  return node;
}

}  // namespace tokred::detail
