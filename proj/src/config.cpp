#include "cvbell/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cvbell {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

double parse_plain_number(const std::string& text, bool& ok) {
  const std::string t = trim(text);
  ok = false;
  if (t.empty()) return 0.0;
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) return 0.0;
  ok = true;
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string current;
  for (char c : text) {
    if (c == ',') {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  const std::string last = trim(current);
  if (!last.empty() || !items.empty()) items.push_back(last);
  return items;
}

}  // namespace

double parse_angle_literal(const std::string& text) {
  const std::string t = lower(trim(text));
  bool ok = false;
  const double plain = parse_plain_number(t, ok);
  if (ok) return plain;

  std::string body = t;
  double sign = 1.0;
  if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
    if (body[0] == '-') sign = -1.0;
    body = body.substr(1);
  }
  const auto pi_pos = body.find("pi");
  if (pi_pos == std::string::npos)
    throw ConfigError("cannot parse angle literal '" + text + "'");
  const std::string num_part = trim(body.substr(0, pi_pos));
  std::string den_part = trim(body.substr(pi_pos + 2));
  double numerator = 1.0;
  if (!num_part.empty()) {
    numerator = parse_plain_number(num_part, ok);
    if (!ok) throw ConfigError("cannot parse angle literal '" + text + "'");
  }
  double denominator = 1.0;
  if (!den_part.empty()) {
    if (den_part[0] != '/')
      throw ConfigError("cannot parse angle literal '" + text + "'");
    denominator = parse_plain_number(trim(den_part.substr(1)), ok);
    if (!ok || denominator == 0.0)
      throw ConfigError("cannot parse angle literal '" + text + "'");
  }
  return sign * numerator * std::numbers::pi / denominator;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, std::string origin) {
  ConfigFile cfg;
  cfg.origin_ = std::move(origin);
  cfg.raw_text_ = text;

  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']') cfg.fail(line_no, "unterminated section header");
      section = lower(trim(stripped.substr(1, stripped.size() - 2)));
      if (!valid_name(section)) cfg.fail(line_no, "invalid section name");
      if (cfg.sections_.count(section))
        cfg.fail(line_no, "duplicate section [" + section + "]");
      cfg.sections_[section] = {};
      cfg.section_lines_[section] = line_no;
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      cfg.fail(line_no, "expected 'key = value' or '[section]'");
    if (section.empty()) cfg.fail(line_no, "key outside of any section");
    const std::string key = lower(trim(stripped.substr(0, eq)));
    if (!valid_name(key)) cfg.fail(line_no, "invalid key name");
    auto& sec = cfg.sections_[section];
    if (sec.count(key))
      cfg.fail(line_no, "duplicate key '" + key + "' in section [" + section + "]");
    sec[key] = Entry{trim(stripped.substr(eq + 1)), line_no, false};
  }
  return cfg;
}

void ConfigFile::fail(int line, const std::string& message) const {
  throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + message);
}

const ConfigFile::Entry* ConfigFile::lookup(const std::string& section,
                                            const std::string& key) const {
  const auto sec = sections_.find(section);
  if (sec == sections_.end()) return nullptr;
  const auto entry = sec->second.find(key);
  if (entry == sec->second.end()) return nullptr;
  entry->second.consumed = true;
  return &entry->second;
}

const ConfigFile::Entry& ConfigFile::require(const std::string& section,
                                             const std::string& key) const {
  const Entry* e = lookup(section, key);
  if (!e)
    throw ConfigError(origin_ + ": missing required key '" + key + "' in section [" +
                      section + "]");
  return *e;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return lookup(section, key) != nullptr;
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) const {
  return require(section, key).value;
}

std::string ConfigFile::get_string_or(const std::string& section, const std::string& key,
                                      const std::string& fallback) const {
  const Entry* e = lookup(section, key);
  return e ? e->value : fallback;
}

double ConfigFile::get_number(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  bool ok = false;
  const double v = parse_plain_number(e.value, ok);
  if (!ok) fail(e.line, "key '" + key + "': cannot parse number '" + e.value + "'");
  return v;
}

double ConfigFile::get_number_or(const std::string& section, const std::string& key,
                                 double fallback) const {
  return has(section, key) ? get_number(section, key) : fallback;
}

double ConfigFile::get_angle(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  try {
    return parse_angle_literal(e.value);
  } catch (const ConfigError&) {
    fail(e.line, "key '" + key + "': cannot parse angle '" + e.value + "'");
  }
}

double ConfigFile::get_angle_or(const std::string& section, const std::string& key,
                                double fallback) const {
  return has(section, key) ? get_angle(section, key) : fallback;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  const std::string t = trim(e.value);
  long long value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(e.line, "key '" + key + "': cannot parse integer '" + e.value + "'");
  return value;
}

long long ConfigFile::get_int_or(const std::string& section, const std::string& key,
                                 long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t ConfigFile::get_u64_or(const std::string& section, const std::string& key,
                                     std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const Entry& e = require(section, key);
  const std::string t = trim(e.value);
  std::uint64_t value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(e.line, "key '" + key + "': cannot parse unsigned integer '" + e.value + "'");
  return value;
}

bool ConfigFile::get_bool_or(const std::string& section, const std::string& key,
                             bool fallback) const {
  if (!has(section, key)) return fallback;
  const Entry& e = require(section, key);
  const std::string v = lower(trim(e.value));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(e.line, "key '" + key + "': cannot parse boolean '" + e.value + "'");
}

std::vector<double> ConfigFile::get_number_list(const std::string& section,
                                                const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) {
    bool ok = false;
    const double v = parse_plain_number(item, ok);
    if (!ok) fail(e.line, "key '" + key + "': cannot parse number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(e.line, "key '" + key + "': empty list");
  return out;
}

std::vector<double> ConfigFile::get_angle_list(const std::string& section,
                                               const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) {
    try {
      out.push_back(parse_angle_literal(item));
    } catch (const ConfigError&) {
      fail(e.line, "key '" + key + "': cannot parse angle '" + item + "'");
    }
  }
  if (out.empty()) fail(e.line, "key '" + key + "': empty list");
  return out;
}

std::vector<int> ConfigFile::get_int_list(const std::string& section,
                                          const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<int> out;
  for (const auto& item : split_list(e.value)) {
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      fail(e.line, "key '" + key + "': cannot parse integer '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(e.line, "key '" + key + "': empty list");
  return out;
}

void ConfigFile::check_all_consumed() const {
  std::vector<std::string> unknown;
  for (const auto& [section, keys] : sections_)
    for (const auto& [key, entry] : keys)
      if (!entry.consumed)
        unknown.push_back(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                          key + "' in section [" + section + "]");
  if (!unknown.empty()) {
    std::string message = "unrecognized configuration keys:";
    for (const auto& u : unknown) message += "\n  " + u;
    throw ConfigError(message);
  }
}

StateSpec<double> resolve_state_spec(const ConfigFile& cfg) {
  if (!cfg.has_section("state"))
    throw ConfigError(cfg.origin() + ": missing [state] section");
  StateSpec<double> spec;
  const std::string variant = cfg.get_string("state", "variant");

  if (variant == "single_photon") {
    StateSpec<double>::SinglePhoton s;
    s.theta = cfg.get_angle_or("state", "theta", std::numbers::pi / 4);
    s.phi = cfg.get_angle_or("state", "phi", 0.0);
    spec.variant = s;
  } else if (variant == "tmss") {
    StateSpec<double>::Tmss s;
    s.r = cfg.get_number("state", "r");
    spec.variant = s;
  } else if (variant == "ghz_vacuum") {
    StateSpec<double>::GhzVacuum s;
    s.n_modes = static_cast<int>(cfg.get_int_or("state", "modes", 3));
    s.k = static_cast<int>(cfg.get_int_or("state", "k", 1));
    s.c1 = {cfg.get_number_or("state", "c1_re", std::sqrt(0.5)),
            cfg.get_number_or("state", "c1_im", 0.0)};
    s.c2 = {cfg.get_number_or("state", "c2_re", std::sqrt(0.5)),
            cfg.get_number_or("state", "c2_im", 0.0)};
    s.p_s = cfg.get_number_or("state", "p_s", 1.0);
    spec.variant = s;
  } else if (variant == "multimode_epr") {
    StateSpec<double>::MultimodeEpr s;
    s.n_modes = static_cast<int>(cfg.get_int_or("state", "modes", 3));
    s.r = cfg.get_number("state", "r");
    spec.variant = s;
  } else if (variant == "vacuum") {
    StateSpec<double>::Vacuum s;
    s.n_modes = static_cast<int>(cfg.get_int_or("state", "modes", 2));
    spec.variant = s;
  } else if (variant == "fock") {
    StateSpec<double>::FockOccupation s;
    s.occupations = cfg.get_int_list("state", "occupations");
    spec.variant = s;
  } else if (variant == "random_pure") {
    StateSpec<double>::RandomPure s;
    s.n_modes = static_cast<int>(cfg.get_int_or("state", "modes", 2));
    s.seed = cfg.get_u64_or("state", "seed", 0);
    spec.variant = s;
  } else if (variant == "random_mixed") {
    StateSpec<double>::RandomMixed s;
    s.n_modes = static_cast<int>(cfg.get_int_or("state", "modes", 2));
    s.seed = cfg.get_u64_or("state", "seed", 0);
    s.rank = static_cast<int>(cfg.get_int_or("state", "rank", 1));
    spec.variant = s;
  } else {
    throw ConfigError(cfg.origin() + ": unknown state variant '" + variant + "'");
  }

  spec.tail_tol = cfg.get_number_or("state", "tail_tol", 1e-12);

  if (cfg.has("state", "cutoff")) {
    spec.cutoffs = cfg.get_int_list("state", "cutoff");
  } else {
    // Default cutoffs chosen from the analytic tail bounds.
    if (const auto* t = std::get_if<StateSpec<double>::Tmss>(&spec.variant))
      spec.cutoffs = {tmss_min_cutoff(t->r, spec.tail_tol / 10)};
    else if (const auto* e = std::get_if<StateSpec<double>::MultimodeEpr>(&spec.variant))
      spec.cutoffs = {squeezed_min_cutoff(e->r, spec.tail_tol / (10.0 * e->n_modes))};
    else
      spec.cutoffs = {1};
  }
  return spec;
}

namespace {

std::vector<Family> parse_families(const std::string& text, const std::string& origin) {
  if (text == "first") return {Family::First};
  if (text == "second") return {Family::Second};
  if (text == "both") return {Family::First, Family::Second};
  throw ConfigError(origin + ": family must be first|second|both, got '" + text + "'");
}

}  // namespace

EvalSettings resolve_eval_settings(const ConfigFile& cfg) {
  EvalSettings s;
  s.families = parse_families(cfg.get_string_or("eval", "family", "both"), cfg.origin());
  s.tol = cfg.get_number_or("eval", "tol", 1e-10);
  s.eta = cfg.get_number_or("eval", "eta", 1.0);
  return s;
}

double resolve_npt_tol(const ConfigFile& cfg) {
  return cfg.get_number_or("npt", "tol", 1e-10);
}

ExperimentConfig resolve_experiment_config(const ConfigFile& cfg) {
  if (!cfg.has_section("experiment"))
    throw ConfigError(cfg.origin() + ": missing [experiment] section");
  ExperimentConfig e;
  e.state = resolve_state_spec(cfg);
  const auto fams =
      parse_families(cfg.get_string_or("experiment", "family", "second"), cfg.origin());
  if (fams.size() != 1)
    throw ConfigError(cfg.origin() + ": experiment family must be first or second");
  e.family = fams[0];
  e.eta = cfg.get_number_or("experiment", "eta", 1.0);
  e.p_detect = cfg.get_number_or("experiment", "p_d", 1.0);
  e.trials = cfg.get_int_or("experiment", "trials", 100000);
  e.seed = cfg.get_u64_or("experiment", "seed", 12345);
  e.min_cell_trials = cfg.get_int_or("experiment", "min_cell", 100);
  e.sigma_threshold = cfg.get_number_or("experiment", "sigma_threshold", 3.0);
  e.grid_points = static_cast<int>(cfg.get_int_or("experiment", "grid_points", 1024));
  e.grid_halfwidth = cfg.get_number_or("experiment", "grid_halfwidth", 8.0);
  e.shard_size = cfg.get_int_or("experiment", "shard_size", 65536);
  e.record_trials = cfg.get_bool_or("experiment", "record_trials", false);

  auto read_probs = [&](const std::string& key,
                        std::array<double, 3>& out) {
    if (!cfg.has("experiment", key)) return;
    const auto list = cfg.get_number_list("experiment", key);
    if (list.size() != 3)
      throw ConfigError(cfg.origin() + ": " + key + " needs exactly 3 entries");
    std::copy(list.begin(), list.end(), out.begin());
  };
  std::array<double, 3> both{1 / 3.0, 1 / 3.0, 1 / 3.0};
  read_probs("setting_probs", both);
  e.setting_probs_1 = both;
  e.setting_probs_2 = both;
  read_probs("setting_probs_1", e.setting_probs_1);
  read_probs("setting_probs_2", e.setting_probs_2);
  return e;
}

SweepSettings resolve_sweep_settings(const ConfigFile& cfg) {
  if (!cfg.has_section("sweep"))
    throw ConfigError(cfg.origin() + ": missing [sweep] section");
  SweepSettings s;
  s.axis = cfg.get_string("sweep", "axis");
  static const char* known[] = {"r", "theta", "phi", "p_s", "eta", "p_d", "k"};
  if (std::find_if(std::begin(known), std::end(known),
                   [&](const char* a) { return s.axis == a; }) == std::end(known))
    throw ConfigError(cfg.origin() + ": unknown sweep axis '" + s.axis + "'");
  s.values = (s.axis == "theta" || s.axis == "phi")
                 ? cfg.get_angle_list("sweep", "values")
                 : cfg.get_number_list("sweep", "values");
  const std::string target = cfg.get_string_or("sweep", "target", "eval");
  if (target == "eval")
    s.target = SweepTarget::Eval;
  else if (target == "experiment")
    s.target = SweepTarget::Experiment;
  else
    throw ConfigError(cfg.origin() + ": sweep target must be eval|experiment");
  if (s.axis == "p_d" && s.target != SweepTarget::Experiment)
    throw ConfigError(cfg.origin() + ": axis p_d requires target = experiment");
  return s;
}

}  // namespace cvbell
