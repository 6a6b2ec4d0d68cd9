#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

namespace simgrade {

// Insertion-ordered so emitted records follow the documented field order.
using Json = nlohmann::ordered_json;

// Calls fn(record, line_number) for every non-blank line of a JSON Lines
// file. Line numbers are 1-based. Throws MissingFile / MalformedRecord.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

Json read_json_file(const std::filesystem::path& path);

// Opens for binary writing, creating parent directories. Throws IoFailure.
std::ofstream open_output(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace simgrade
