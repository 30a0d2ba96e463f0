#pragma once
// File formats: raw little-endian float64 images with a JSON sidecar, PGM
// previews, and the CSV tables written by the command-line tool. Every real
// number in a CSV is printed with 17 significant digits, so tables round-trip
// exactly and identical runs give identical bytes.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bench.hpp"
#include "error.hpp"
#include "evidence.hpp"
#include "gibbs.hpp"
#include "spectral.hpp"

namespace chibsel::io {

namespace fs = std::filesystem;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_pct(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

/// Sidecar path: "y.f64" -> "y.json".
inline fs::path sidecar_path(const fs::path& raw) {
  fs::path s = raw;
  s.replace_extension(".json");
  return s;
}

inline void write_image(const fs::path& raw, const RealField& f, const std::string& kind) {
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + raw.string() + " for writing");
  for (double v : f.values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  nlohmann::json side = {{"width", f.width}, {"height", f.height}, {"kind", kind}};
  std::ofstream js(sidecar_path(raw));
  js << side.dump(2) << "\n";
  if (!out || !js) throw ConfigError("write failed for " + raw.string());
}

inline RealField read_image(const fs::path& raw) {
  const fs::path side = sidecar_path(raw);
  std::ifstream js(side);
  if (!js) throw ConfigError("missing image sidecar " + side.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(side.string() + ": " + e.what());
  }
  const auto w = meta.at("width").get<std::size_t>();
  const auto h = meta.at("height").get<std::size_t>();
  std::ifstream in(raw, std::ios::binary);
  if (!in) throw ConfigError("cannot open image " + raw.string());
  RealField f(w, h);
  for (std::size_t p = 0; p < f.size(); ++p) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if (!in) throw ConfigError(raw.string() + ": file shorter than width*height doubles");
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    f[p] = std::bit_cast<double>(bits);
    if (!std::isfinite(f[p])) throw ConfigError(raw.string() + ": non-finite pixel");
  }
  char extra;
  if (in.read(&extra, 1)) throw ConfigError(raw.string() + ": trailing bytes after image data");
  return f;
}

/// 8-bit binary PGM, min-max scaled.
inline void write_pgm(const fs::path& path, const RealField& f) {
  const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << f.width << " " << f.height << "\n255\n";
  for (double v : f.values) {
    const double t = span > 0 ? (v - lo) / span : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(t * 255.0 + 0.5, 0.0, 255.0))));
  }
}

inline const char* kEvidenceTaskHeader =
    "k_true,replicate,model_id,image_kind,noise_kind,log_evidence,term_likelihood,term_prior,"
    "term_posterior_density,std_error,gamma_bar_x,gamma_bar_e,samples";
inline const char* kEvidenceHeader =
    "model_id,image_kind,noise_kind,log_evidence,term_likelihood,term_prior,"
    "term_posterior_density,std_error,gamma_bar_x,gamma_bar_e,samples";

inline std::pair<std::string, std::string> split_label(const std::string& label) {
  const auto slash = label.find('/');
  if (slash == std::string::npos) return {label, ""};
  return {label.substr(0, slash), label.substr(slash + 1)};
}

inline void write_report_fields(std::ostream& os, const EvidenceReport& r) {
  const auto [ik, nk] = split_label(r.label);
  os << r.model_id << ',' << ik << ',' << nk << ',' << fmt17(r.log_evidence) << ','
     << fmt17(r.term_likelihood) << ',' << fmt17(r.term_prior) << ','
     << fmt17(r.term_posterior_density) << ',' << fmt17(r.std_error) << ','
     << fmt17(r.gamma_bar.gamma_x) << ',' << fmt17(r.gamma_bar.gamma_e) << ',' << r.sample_count;
}

inline void write_evidence_csv(std::ostream& os, const std::vector<EvidenceReport>& reports) {
  os << kEvidenceHeader << '\n';
  for (const auto& r : reports) {
    write_report_fields(os, r);
    os << '\n';
  }
}

inline void write_evidence_row(std::ostream& os, const EvidenceRow& row) {
  os << row.k_true << ',' << row.replicate << ',';
  write_report_fields(os, row.report);
  os << '\n';
}

inline void write_evidence_rows_csv(std::ostream& os, const std::vector<EvidenceRow>& rows) {
  os << kEvidenceTaskHeader << '\n';
  for (const auto& r : rows) write_evidence_row(os, r);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a sweep evidence log. Lines that are incomplete (an interrupted
/// write) are skipped.
inline std::vector<EvidenceRow> read_evidence_rows_csv(std::istream& is) {
  std::vector<EvidenceRow> rows;
  std::string line;
  if (!std::getline(is, line)) return rows;
  if (line != kEvidenceTaskHeader) throw ConfigError("evidence log has an unexpected header");
  while (std::getline(is, line)) {
    const auto c = split_csv_line(line);
    if (c.size() != 13) continue;
    try {
      EvidenceRow r;
      r.k_true = std::stoi(c[0]);
      r.replicate = std::stoull(c[1]);
      r.k_candidate = std::stoi(c[2]);
      auto& rep = r.report;
      rep.model_id = r.k_candidate;
      rep.label = c[3] + "/" + c[4];
      rep.log_evidence = std::stod(c[5]);
      rep.term_likelihood = std::stod(c[6]);
      rep.term_prior = std::stod(c[7]);
      rep.term_posterior_density = std::stod(c[8]);
      rep.std_error = std::stod(c[9]);
      rep.gamma_bar = HyperState{std::stod(c[10]), std::stod(c[11])};
      rep.sample_count = std::stoull(c[12]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      continue;
    }
  }
  return rows;
}

inline void write_posterior_csv(std::ostream& os, const ModelPosterior& post) {
  for (int id : post.model_ids) os << "p_" << id << ',';
  os << "selected\n";
  for (double p : post.probabilities) os << fmt17(p) << ',';
  os << post.selected << '\n';
}

inline void write_confusion_csv(std::ostream& os, const ConfusionMatrix& m,
                                const ModelCatalog& cat) {
  os << "true_model,true_label,replicates";
  for (int id : m.model_ids) os << ",pct_" << id;
  for (int id : m.model_ids) os << ",count_" << id;
  os << '\n';
  for (int kt : m.true_models) {
    os << kt << ',' << cat.by_id(kt).label() << ',' << m.row_sum(kt);
    for (int ks : m.model_ids) os << ',' << fmt_pct(m.percentage(kt, ks));
    for (auto c : m.counts[m.position(kt)]) os << ',' << c;
    os << '\n';
  }
}

inline void write_chain_csv(std::ostream& os, const GibbsChain& chain) {
  os << "g,gamma_x,gamma_e,stat_x,stat_e,burn_in\n";
  for (std::size_t g = 0; g < chain.records.size(); ++g) {
    const auto& r = chain.records[g];
    os << g + 1 << ',' << fmt17(r.gamma.gamma_x) << ',' << fmt17(r.gamma.gamma_e) << ','
       << fmt17(r.stat_x) << ',' << fmt17(r.stat_e) << ',' << (chain.is_burn_in(g) ? 1 : 0) << '\n';
  }
}

inline void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
  os << "G,log_evidence,std_error,oracle\n";
  for (const auto& t : trace) {
    os << t.iterations << ',' << fmt17(t.log_evidence) << ',' << fmt17(t.std_error) << ','
       << (t.oracle ? fmt17(*t.oracle) : std::string()) << '\n';
  }
}

inline void write_timing_csv(std::ostream& os, const std::vector<EvidenceRow>& rows) {
  os << "k_true,replicate,model_id,seconds\n";
  for (const auto& r : rows) {
    os << r.k_true << ',' << r.replicate << ',' << r.k_candidate << ',' << fmt17(r.seconds) << '\n';
  }
}

inline void write_timing_summary_csv(std::ostream& os, const TimingSummary& s) {
  os << "count,median_seconds,p95_seconds,total_seconds\n"
     << s.count << ',' << fmt17(s.median) << ',' << fmt17(s.p95) << ',' << fmt17(s.total) << '\n';
}

}  // namespace chibsel::io
