#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qpl/trigpoly.hpp"

namespace qpl {

// Flat key=value run description.  Everything a subcommand reads comes from
// here, so a config file, flag overrides, and a rerun from the embedded echo
// all drive the exact same code path.
struct RunConfig {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> kv;  // insertion order kept

  const std::string* find(std::string_view key) const;
  bool has(std::string_view key) const { return find(key) != nullptr; }
  void set(std::string_view key, std::string value);  // overwrite or append

  std::string str(std::string_view key, std::string fallback = "") const;
  // Numbers accept plain decimals plus the exact named constants golden
  // ((sqrt 5 - 1)/2), silver (sqrt 2 - 1), and exp(x); parse failures are
  // usage errors.
  double num(std::string_view key, double fallback) const;
  double num_required(std::string_view key) const;
  long long integer(std::string_view key, long long fallback) const;
  bool flag(std::string_view key, bool fallback) const;  // 1/0, true/false, yes/no
};

double parse_number(std::string_view text);

// "a,b,c" of numbers / named constants.
std::vector<double> parse_number_list(std::string_view text);

// Fourier spec "k:c,k:c" of a real even 1-d potential: each entry puts
// coefficient c at modes +-k (k = 0 contributes once).
ScalarPoly parse_potential(std::string_view text);

// key=value lines; blank lines and '#' comments skipped, whitespace trimmed.
void merge_kv_text(RunConfig& cfg, std::string_view text);
void merge_kv_file(RunConfig& cfg, const std::string& path);

// Canonical echo embedded in every artifact: subcommand first, then kv in
// insertion order, one "key=value" per line.
std::string serialize(const RunConfig& cfg);

std::string hash_hex(std::string_view bytes);  // 16 hex digits of fnv1a64

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> cells);
};

// '#'-prefixed reproducibility header (config echo + content hash of the
// payload), then an RFC-4180 style table: quoted cells only where needed,
// quotes doubled, LF endings.
std::string render_csv(const RunConfig& cfg, const CsvTable& table);

// {"tool", "config": {...}, "results": ..., "content_hash"}; the hash covers
// the serialized results subtree.
std::string render_json(const RunConfig& cfg, const nlohmann::ordered_json& results);

// Serialized (one writer at a time), throws a usage error when the path
// cannot be created.
void write_file(const std::string& path, std::string_view content);

}  // namespace qpl
