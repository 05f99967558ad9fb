#ifndef CVBELL_CONFIG_HPP
#define CVBELL_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cvbell/experiment.hpp"

namespace cvbell {

// Sectioned key-value config file:
//   [section]
//   key = value        # comment
// Unknown keys and unused sections are hard errors so silent typos in physics
// parameters cannot pass. Angle values accept "pi"-fraction literals
// ("pi/4", "3pi/8", "-pi/2") as well as plain decimals.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text, std::string origin);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_number(const std::string& section, const std::string& key) const;
  double get_number_or(const std::string& section, const std::string& key,
                       double fallback) const;
  double get_angle(const std::string& section, const std::string& key) const;
  double get_angle_or(const std::string& section, const std::string& key,
                      double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  std::uint64_t get_u64_or(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const;
  std::vector<double> get_number_list(const std::string& section,
                                      const std::string& key) const;
  std::vector<double> get_angle_list(const std::string& section,
                                     const std::string& key) const;
  std::vector<int> get_int_list(const std::string& section,
                                const std::string& key) const;

  // Throws ConfigError naming every key that was never read (with line
  // numbers) — call after the active command consumed what it needs.
  void check_all_consumed() const;

  const std::string& origin() const { return origin_; }
  const std::string& raw_text() const { return raw_text_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };

  const Entry& require(const std::string& section, const std::string& key) const;
  const Entry* lookup(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(int line, const std::string& message) const;

  std::string origin_;
  std::string raw_text_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, int> section_lines_;
};

// "pi", "pi/4", "3pi/8", "-pi/2", "2pi" or a plain decimal.
double parse_angle_literal(const std::string& text);

// Resolved command inputs.
struct EvalSettings {
  std::vector<Family> families;  // one or both
  double tol = 1e-10;
  double eta = 1.0;  // loss channel applied to every mode before evaluation
};

enum class SweepTarget { Eval, Experiment };

struct SweepSettings {
  std::string axis;  // r, theta, phi, p_s, eta, p_d, k
  std::vector<double> values;
  SweepTarget target = SweepTarget::Eval;
};

StateSpec<double> resolve_state_spec(const ConfigFile& cfg);
EvalSettings resolve_eval_settings(const ConfigFile& cfg);
double resolve_npt_tol(const ConfigFile& cfg);
ExperimentConfig resolve_experiment_config(const ConfigFile& cfg);
SweepSettings resolve_sweep_settings(const ConfigFile& cfg);

}  // namespace cvbell

#endif
