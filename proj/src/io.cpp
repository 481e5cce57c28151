#include "infosample/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "infosample/errors.hpp"

namespace infosample {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + partial.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed: " + partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw IoError("cannot rename " + partial.string() + ": " + ec.message());
}

nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw FormatError(source + ":" + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
}

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                    const std::string& source) {
  if (!obj.is_object()) throw FormatError(source + ": expected a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(source + ": missing field '" + key + "'");
  return *it;
}

}  // namespace infosample
