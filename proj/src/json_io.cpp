#include "simgrade/json_io.hpp"

#include <sstream>

#include "simgrade/error.hpp"

namespace simgrade {

namespace fs = std::filesystem;

void for_each_jsonl(const fs::path& path, const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!fs::exists(path) || !in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": not a JSON object");
    }
    try {
      fn(record, line_no);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!fs::exists(path) || !in) throw Error(ErrorCode::MissingFile, path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace simgrade
