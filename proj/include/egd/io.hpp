#pragma once

// File plumbing shared by the CLI: atomic writes, CSV assembly, token text.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "egd/errors.hpp"
#include "egd/toy_model.hpp"

namespace egd {

/// Writes `content` to a sibling temp file, then renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError("cannot create directory '" + path.parent_path().string() + "'");
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw DataError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

/// A set of output files that are only written once all of them are built.
class ArtifactSet {
 public:
  void add(std::filesystem::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }
  void commit() const {
    for (const auto& [path, content] : files_) write_file_atomic(path, content);
  }
  const std::vector<std::pair<std::filesystem::path, std::string>>& files() const { return files_; }

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << quote(cells[i]);
    }
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + '"';
  }

  std::ostringstream os_;
};

/// Shortest round-trippable decimal form.
inline std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Token-id -> surface text table, loaded from a JSON array of strings.
class TokenTable {
 public:
  TokenTable() = default;
  explicit TokenTable(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {}

  static TokenTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open token table '" + path + "'");
    try {
      return TokenTable(nlohmann::json::parse(in).get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("token table '" + path + "': " + e.what());
    }
  }

  bool empty() const noexcept { return pieces_.empty(); }

  /// Space-joined pieces; the end-of-sequence token is dropped. Without a
  /// table, ids are printed as numbers.
  std::string detokenize(const std::vector<TokenId>& ids) const {
    std::string out;
    for (TokenId id : ids) {
      if (id == kEosToken) continue;
      if (!out.empty()) out += ' ';
      if (pieces_.empty()) {
        out += std::to_string(id);
      } else if (id < pieces_.size()) {
        out += pieces_[id];
      } else {
        out += "<" + std::to_string(id) + ">";
      }
    }
    return out;
  }

 private:
  std::vector<std::string> pieces_;
};

}  // namespace egd
