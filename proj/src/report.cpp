#include "cvbell/report.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace cvbell {

namespace {

using nlohmann::json;

// ratio can be infinite; JSON has no Infinity, so it degrades to a string.
json number_or_inf(double v) {
  if (std::isinf(v) || std::isnan(v)) return json(format_double(v));
  return json(v);
}

json inequality_json(const InequalityReport<double>& r) {
  json j;
  j["family"] = family_name(r.family);
  j["N"] = r.n_modes;
  j["k"] = r.k;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["ratio"] = number_or_inf(r.ratio);
  j["violated"] = r.violated;
  j["sigma"] = r.sigma;
  j["source"] =
      r.source == InequalityReport<double>::Source::Analytic ? "analytic" : "sampled";
  if (r.source == InequalityReport<double>::Source::Sampled) {
    j["lhs_se"] = r.lhs_se;
    j["rhs_se"] = r.rhs_se;
  }
  return j;
}

json moment_json(const Moment& m) {
  return json{{"mean", m.mean}, {"se", m.se}, {"n", m.n}};
}

std::string partition_string(const std::vector<int>& partition) {
  std::string s;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(partition[i]);
  }
  return s;
}

}  // namespace

std::string manifest_json_text(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["workers"] = m.workers;
  j["config_echo"] = m.config_echo;
  j["outputs"] = m.outputs;
  j["wall_seconds"] = m.wall_seconds;
  j["timestamp"] = m.timestamp;
  return j.dump(2) + "\n";
}

std::string csv_manifest_comment() { return "# manifest: manifest.json\n"; }

std::string inequality_csv_header() {
  return "family,n,k,lhs,rhs,ratio,violated,sigma,source\n";
}

std::string inequality_csv_row(const InequalityReport<double>& r) {
  std::ostringstream out;
  out << family_name(r.family) << ',' << r.n_modes << ',' << r.k << ','
      << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
      << format_double(r.ratio) << ',' << (r.violated ? "true" : "false") << ','
      << format_double(r.sigma) << ','
      << (r.source == InequalityReport<double>::Source::Analytic ? "analytic" : "sampled")
      << '\n';
  return out.str();
}

std::string inequality_json_text(const std::vector<InequalityReport<double>>& reports) {
  json j = json::array();
  for (const auto& r : reports) j.push_back(inequality_json(r));
  return json{{"manifest", "manifest.json"}, {"reports", j}}.dump(2) + "\n";
}

void print_inequality_table(std::ostream& out,
                            const std::vector<InequalityReport<double>>& reports) {
  out << std::left << std::setw(8) << "family" << std::right << std::setw(4) << "N"
      << std::setw(4) << "k" << std::setw(16) << "lhs" << std::setw(16) << "rhs"
      << std::setw(14) << "ratio" << std::setw(10) << "violated" << std::setw(10)
      << "sigma" << "  source\n";
  for (const auto& r : reports) {
    std::ostringstream ratio;
    if (std::isinf(r.ratio))
      ratio << "inf";
    else
      ratio << std::setprecision(8) << r.ratio;
    out << std::left << std::setw(8) << family_name(r.family) << std::right
        << std::setw(4) << r.n_modes << std::setw(4) << r.k << std::setw(16)
        << std::setprecision(8) << r.lhs << std::setw(16) << r.rhs << std::setw(14)
        << ratio.str() << std::setw(10) << (r.violated ? "yes" : "no") << std::setw(10)
        << std::setprecision(3) << r.sigma << "  "
        << (r.source == InequalityReport<double>::Source::Analytic ? "analytic"
                                                                   : "sampled")
        << '\n';
  }
}

std::string pt_csv_header() { return "partition,min_eig,negativity,is_npt\n"; }

std::string pt_csv_row(const PTReport<double>& r) {
  std::ostringstream out;
  out << partition_string(r.partition) << ',' << format_double(r.min_eig) << ','
      << format_double(r.negativity) << ',' << (r.is_npt ? "true" : "false") << '\n';
  return out.str();
}

std::string pt_json_text(const std::vector<PTReport<double>>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json j;
    j["partition"] = r.partition;
    j["min_eig"] = r.min_eig;
    j["negativity_extension"] = r.negativity;
    j["is_npt"] = r.is_npt;
    j["tol"] = r.tol;
    arr.push_back(j);
  }
  return json{{"manifest", "manifest.json"}, {"reports", arr}}.dump(2) + "\n";
}

void print_pt_table(std::ostream& out, const std::vector<PTReport<double>>& reports) {
  out << std::left << std::setw(12) << "partition" << std::right << std::setw(16)
      << "min_eig" << std::setw(16) << "negativity*" << std::setw(8) << "NPT\n";
  for (const auto& r : reports)
    out << std::left << std::setw(12) << partition_string(r.partition) << std::right
        << std::setw(16) << std::setprecision(8) << r.min_eig << std::setw(16)
        << r.negativity << std::setw(8) << (r.is_npt ? "yes" : "no") << '\n';
  out << "(* negativity is an extension measure, not part of the basic witness)\n";
}

std::string loophole_json_text(const LoopholeReport& r) {
  json j;
  j["manifest"] = "manifest.json";
  j["family"] = family_name(r.inequality.family);
  j["lhs_est"] = {{"value", r.inequality.lhs}, {"se", r.inequality.lhs_se}};
  j["naive_rhs_est"] = {{"value", r.inequality.rhs}, {"se", r.inequality.rhs_se}};
  j["corrected_rhs"] = {{"value", r.corrected_rhs}, {"se", r.corrected_rhs_se}};
  j["violated_naive"] = r.violated_naive;
  j["violated_corrected"] = r.violated_corrected;
  j["sigma_naive"] = r.sigma_naive;
  j["sigma_corrected"] = r.sigma_corrected;
  j["corrected_bound_available"] = r.corrected_bound_available;
  if (!r.note.empty()) j["note"] = r.note;
  j["p_d_observed"] = {r.p_detect_observed[0], r.p_detect_observed[1]};
  json hist = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int jj = 0; jj < 3; ++jj) row.push_back(r.histogram[i][jj]);
    hist.push_back(row);
  }
  j["settings_histogram"] = hist;
  const Ingredients& g = r.ingredients;
  j["ingredients"] = {
      {"xx", moment_json(g.xx)},       {"yy", moment_json(g.yy)},
      {"xy", moment_json(g.xy)},       {"yx", moment_json(g.yx)},
      {"n1n2", moment_json(g.n1n2)},   {"n1", moment_json(g.n1)},
      {"n2", moment_json(g.n2)},       {"x1sq", moment_json(g.x1sq)},
      {"y1sq", moment_json(g.y1sq)},   {"x2sq", moment_json(g.x2sq)},
      {"y2sq", moment_json(g.y2sq)},   {"n1_detected", moment_json(g.n1_det)},
      {"n2_detected", moment_json(g.n2_det)}, {"p1_detected", moment_json(g.p1_det)},
      {"p2_detected", moment_json(g.p2_det)}};
  return j.dump(2) + "\n";
}

std::string ingredients_csv(const Ingredients& g) {
  std::ostringstream out;
  out << "ingredient,mean,se,n\n";
  const struct {
    const char* name;
    const Moment* m;
  } rows[] = {{"xx", &g.xx},         {"yy", &g.yy},           {"xy", &g.xy},
              {"yx", &g.yx},         {"n1n2", &g.n1n2},       {"n1", &g.n1},
              {"n2", &g.n2},         {"x1sq", &g.x1sq},       {"y1sq", &g.y1sq},
              {"x2sq", &g.x2sq},     {"y2sq", &g.y2sq},       {"n1_detected", &g.n1_det},
              {"n2_detected", &g.n2_det}, {"p1_detected", &g.p1_det},
              {"p2_detected", &g.p2_det}};
  for (const auto& row : rows)
    out << row.name << ',' << format_double(row.m->mean) << ','
        << format_double(row.m->se) << ',' << row.m->n << '\n';
  return out.str();
}

std::string trial_log_csv(const LoopholeReport& r) {
  std::ostringstream out;
  out << "trial,r1,r2,setting1,setting2,outcome1,outcome2,detected1,detected2\n";
  static const char* names[] = {"X", "Y", "N"};
  Eigen::Index t = 0;
  for (const auto& rec : r.trial_log) {
    out << t++ << ',' << int(rec.r1) << ',' << int(rec.r2) << ',' << names[rec.r1] << ','
        << names[rec.r2] << ',' << format_double(rec.out1) << ','
        << format_double(rec.out2) << ',' << int(rec.det1) << ',' << int(rec.det2)
        << '\n';
  }
  return out.str();
}

void print_loophole_summary(std::ostream& out, const LoopholeReport& r) {
  out << "family:              " << family_name(r.inequality.family) << '\n'
      << "lhs estimate:        " << r.inequality.lhs << " +- " << r.inequality.lhs_se
      << '\n'
      << "naive rhs estimate:  " << r.inequality.rhs << " +- " << r.inequality.rhs_se
      << '\n'
      << "corrected rhs:       " << r.corrected_rhs << " +- " << r.corrected_rhs_se
      << '\n'
      << "violated (naive):    " << (r.violated_naive ? "yes" : "no") << " at "
      << r.sigma_naive << " sigma\n"
      << "violated (corrected):" << (r.violated_corrected ? " yes" : " no") << " at "
      << r.sigma_corrected << " sigma\n"
      << "p_D observed:        " << r.p_detect_observed[0] << ", "
      << r.p_detect_observed[1] << '\n';
  if (!r.note.empty()) out << "note:                " << r.note << '\n';
  out << "settings histogram (rows R1, cols R2):\n";
  for (int i = 0; i < 3; ++i) {
    out << "  ";
    for (int j = 0; j < 3; ++j) out << std::setw(10) << r.histogram[i][j];
    out << '\n';
  }
}

std::string sweep_csv_header(const std::string& axis, bool experiment_target) {
  if (!experiment_target) return axis + "," + inequality_csv_header();
  return axis +
         ",family,lhs,lhs_se,naive_rhs,naive_rhs_se,corrected_rhs,corrected_rhs_se,"
         "violated_naive,violated_corrected,sigma_naive,sigma_corrected,p1_d,p2_d\n";
}

std::string sweep_eval_csv_row(double value, const InequalityReport<double>& report) {
  return format_double(value) + "," + inequality_csv_row(report);
}

std::string sweep_experiment_csv_row(double value, const LoopholeReport& r) {
  std::ostringstream out;
  out << format_double(value) << ',' << family_name(r.inequality.family) << ','
      << format_double(r.inequality.lhs) << ',' << format_double(r.inequality.lhs_se)
      << ',' << format_double(r.inequality.rhs) << ','
      << format_double(r.inequality.rhs_se) << ',' << format_double(r.corrected_rhs)
      << ',' << format_double(r.corrected_rhs_se) << ','
      << (r.violated_naive ? "true" : "false") << ','
      << (r.violated_corrected ? "true" : "false") << ',' << format_double(r.sigma_naive)
      << ',' << format_double(r.sigma_corrected) << ','
      << format_double(r.p_detect_observed[0]) << ','
      << format_double(r.p_detect_observed[1]) << '\n';
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
}

}  // namespace cvbell
