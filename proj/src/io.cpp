#include "qpl/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "qpl/errors.hpp"
#include "qpl/util.hpp"

namespace qpl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::string* RunConfig::find(std::string_view key) const {
  for (auto& [k, v] : kv)
    if (k == key) return &v;
  return nullptr;
}

void RunConfig::set(std::string_view key, std::string value) {
  for (auto& [k, v] : kv)
    if (k == key) {
      v = std::move(value);
      return;
    }
  kv.emplace_back(std::string(key), std::move(value));
}

std::string RunConfig::str(std::string_view key, std::string fallback) const {
  const std::string* v = find(key);
  return v ? *v : std::move(fallback);
}

double RunConfig::num(std::string_view key, double fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  try {
    return parse_number(*v);
  } catch (const Error&) {
    throw InconsistentInput("bad number for '" + std::string(key) + "': " + *v);
  }
}

double RunConfig::num_required(std::string_view key) const {
  if (!find(key)) throw InconsistentInput("missing required key '" + std::string(key) + "'");
  return num(key, 0.0);
}

long long RunConfig::integer(std::string_view key, long long fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::string_view t = trim(*v);
  long long out = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw InconsistentInput("bad integer for '" + std::string(key) + "': " + *v);
  return out;
}

bool RunConfig::flag(std::string_view key, bool fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::string_view t = trim(*v);
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw InconsistentInput("bad flag for '" + std::string(key) + "': " + *v);
}

double parse_number(std::string_view text) {
  std::string_view t = trim(text);
  if (t == "golden") return (std::sqrt(5.0) - 1.0) / 2.0;
  if (t == "silver") return std::sqrt(2.0) - 1.0;
  if (t.size() > 5 && t.substr(0, 4) == "exp(" && t.back() == ')')
    return std::exp(parse_number(t.substr(4, t.size() - 5)));
  double out = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw InconsistentInput("not a number: '" + std::string(text) + "'");
  return out;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    std::size_t c = rest.find(',');
    out.push_back(parse_number(rest.substr(0, c)));
    rest = c == std::string_view::npos ? std::string_view{} : rest.substr(c + 1);
  }
  if (out.empty()) throw InconsistentInput("empty number list");
  return out;
}

ScalarPoly parse_potential(std::string_view text) {
  ScalarPoly v(1, 1);
  std::string_view rest = trim(text);
  if (rest.empty() || rest == "0") return v;
  while (!rest.empty()) {
    std::size_t c = rest.find(',');
    std::string_view entry = trim(rest.substr(0, c));
    rest = c == std::string_view::npos ? std::string_view{} : rest.substr(c + 1);
    std::size_t colon = entry.find(':');
    if (colon == std::string_view::npos)
      throw InconsistentInput("potential entries are k:coeff, got '" + std::string(entry) + "'");
    int k = 0;
    std::string_view ks = trim(entry.substr(0, colon));
    auto [p, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), k);
    if (ec != std::errc{} || p != ks.data() + ks.size() || k < 0)
      throw InconsistentInput("bad mode index in potential: '" + std::string(entry) + "'");
    double coeff = parse_number(entry.substr(colon + 1));
    v.add_to({k, 0, 0}, cplx(coeff, 0.0));
    if (k != 0) v.add_to({-k, 0, 0}, cplx(coeff, 0.0));
  }
  return v;
}

void merge_kv_text(RunConfig& cfg, std::string_view text) {
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InconsistentInput("config line " + std::to_string(lineno) + " is not key=value: '" +
                              std::string(line) + "'");
    std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw InconsistentInput("config line " + std::to_string(lineno) + " has no key");
    cfg.set(key, std::string(trim(line.substr(eq + 1))));
  }
}

void merge_kv_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InconsistentInput("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  merge_kv_text(cfg, ss.str());
}

std::string serialize(const RunConfig& cfg) {
  std::string out = "subcommand=" + cfg.subcommand + "\n";
  for (auto& [k, v] : cfg.kv) out += k + "=" + v + "\n";
  return out;
}

std::string hash_hex(std::string_view bytes) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size())
    throw InconsistentInput("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(columns.size()));
  rows.push_back(std::move(cells));
}

namespace {

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(cells[i]);
  }
  out += '\n';
  return out;
}

std::string config_banner(const RunConfig& cfg) {
  std::string out = "# qpl " + cfg.subcommand + "\n";
  std::istringstream echo(serialize(cfg));
  for (std::string line; std::getline(echo, line);) out += "# " + line + "\n";
  return out;
}

}  // namespace

std::string render_csv(const RunConfig& cfg, const CsvTable& table) {
  std::string payload = csv_line(table.columns);
  for (auto& row : table.rows) payload += csv_line(row);
  return config_banner(cfg) + "# content_hash=" + hash_hex(payload) + "\n" + payload;
}

std::string render_json(const RunConfig& cfg, const nlohmann::ordered_json& results) {
  nlohmann::ordered_json doc;
  doc["tool"] = "qpl";
  doc["subcommand"] = cfg.subcommand;
  nlohmann::ordered_json conf = nlohmann::ordered_json::object();
  for (auto& [k, v] : cfg.kv) conf[k] = v;
  doc["config"] = std::move(conf);
  doc["results"] = results;
  doc["content_hash"] = hash_hex(results.dump());
  return doc.dump(2) + "\n";
}

void write_file(const std::string& path, std::string_view content) {
  static std::mutex gate;
  std::lock_guard<std::mutex> lock(gate);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InconsistentInput("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw InconsistentInput("short write to '" + path + "'");
}

}  // namespace qpl
