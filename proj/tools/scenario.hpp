#pragma once

// Scenario configs (JSON) and the pipelines behind every CLI subcommand.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "afcmem/io.hpp"

namespace afcmem::cli {

using json = nlohmann::json;

// Read-only view of one JSON object that remembers which keys were consumed,
// so unknown keys can be reported with their full path.
class Block {
 public:
  Block(const json& node, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::string text(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::optional<Block> child(const std::string& key) const;
  Block require(const std::string& key) const;
  std::vector<Block> children(const std::string& key) const;
  const json& raw(const std::string& key) const;
  std::string path_of(const std::string& key) const;
  const std::string& path() const { return path_; }

  // Throws ConfigError naming the first key that was never read.
  void done() const;

 private:
  const json* node_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

struct RunContext {
  std::optional<std::uint64_t> seed;  // --seed overrides the config
  unsigned threads = 1;
  std::filesystem::path base_dir;  // relative data paths resolve here
};

struct Artifacts {
  std::vector<std::pair<std::string, io::Table>> tables;
  io::Record summary;
  std::optional<std::uint64_t> seed_used;
};

// Subcommand names, in the order they are listed by --help.
const std::vector<std::string>& pipeline_names();

// Runs `pipeline` on a parsed config. Config problems raise ConfigError
// before any computation that depends on them.
Artifacts run_pipeline(const std::string& pipeline, const json& config, const RunContext& ctx);

json load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& bytes);

// Writes every table, summary.txt and manifest.json into `out`. Nothing is
// written unless the whole run succeeded.
void write_artifacts(const std::filesystem::path& out, const std::string& pipeline, const json& config,
                     const Artifacts& artifacts);

}  // namespace afcmem::cli
