#pragma once

#include <optional>
#include <string>
#include <vector>

#include "streammark/message.hpp"

namespace streammark {

// Small strict-enough XML reader for sensor documents: elements, nested
// children, attributes (ignored), character data with the five predefined
// entities, comments and an optional prolog. Returns the leaf elements as
// name -> text fields in document order (duplicate leaf names keep the last
// value); nullopt on malformed input.
std::optional<std::vector<Field>> parse_xml_leaves(const std::string& doc);

// Renders fields as <root><name>value</name>...</root> with escaping; the
// inverse fixture generator for the parsing task.
std::string fields_to_xml(const std::vector<Field>& fields,
                          const std::string& root = "obs");

std::string xml_escape(const std::string& s);

}  // namespace streammark
