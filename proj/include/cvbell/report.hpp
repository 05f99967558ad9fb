#ifndef CVBELL_REPORT_HPP
#define CVBELL_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "cvbell/experiment.hpp"
#include "cvbell/npt.hpp"
#include "cvbell/util.hpp"

namespace cvbell {

inline constexpr const char* kToolVersion = "0.1.0";

// Every output file points back at its manifest; timestamps and wall-clock
// live only here so CSV bodies stay byte-identical across reruns of the same
// (config, seed).
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string config_echo;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  std::string timestamp;
};

std::string manifest_json_text(const RunManifest& manifest);

// "# manifest: manifest.json" — the embedded back-reference carried by every
// CSV emitted next to a manifest.
std::string csv_manifest_comment();

// Inequality reports: CSV columns family,n,k,lhs,rhs,ratio,violated,sigma,source
std::string inequality_csv_header();
std::string inequality_csv_row(const InequalityReport<double>& report);
std::string inequality_json_text(const std::vector<InequalityReport<double>>& reports);
void print_inequality_table(std::ostream& out,
                            const std::vector<InequalityReport<double>>& reports);

// PT reports: CSV columns partition,min_eig,negativity,is_npt
// (negativity is an extension measure beyond the plain NPT verdict).
std::string pt_csv_header();
std::string pt_csv_row(const PTReport<double>& report);
std::string pt_json_text(const std::vector<PTReport<double>>& reports);
void print_pt_table(std::ostream& out, const std::vector<PTReport<double>>& reports);

// Loophole experiment report (JSON record plus optional per-trial CSV).
std::string loophole_json_text(const LoopholeReport& report);
std::string ingredients_csv(const Ingredients& ingredients);
std::string trial_log_csv(const LoopholeReport& report);
void print_loophole_summary(std::ostream& out, const LoopholeReport& report);

// Sweep CSV: axis value column followed by the report columns.
std::string sweep_csv_header(const std::string& axis, bool experiment_target);
std::string sweep_eval_csv_row(double value, const InequalityReport<double>& report);
std::string sweep_experiment_csv_row(double value, const LoopholeReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace cvbell

#endif
