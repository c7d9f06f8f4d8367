#include "typoesl/eval.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/metrics.hpp"
#include "typoesl/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace typoesl {

double absolute_error(const ErrorDistribution& pred, const ErrorDistribution& truth, ErrorType e) {
  return std::abs(pred[e] - truth[e]);
}

double kl_divergence(const ErrorDistribution& truth, const ErrorDistribution& pred) {
  return kl_divergence(truth.values(), pred.values());
}

const SystemSummary& EvaluationSummary::at(System s) const {
  for (const auto& row : systems) {
    if (row.system == s) return row;
  }
  throw LookupError("no summary for system " + std::string(to_string(s)));
}

namespace {

struct Accumulated {
  std::map<std::string, ErrorVector> abs_error;  // per language
  std::map<std::string, double> kl;
};

}  // namespace

EvaluationSummary summarize(std::span<const PredictionRecord> records) {
  std::vector<System> order;
  std::map<System, Accumulated> acc;
  for (const auto& r : records) {
    if (!acc.count(r.system)) order.push_back(r.system);
    auto& a = acc[r.system];
    if (a.abs_error.count(r.language)) {
      throw DataError("duplicate record for " + r.language + " / " + std::string(to_string(r.system)));
    }
    a.abs_error[r.language] = (r.predicted.values() - r.truth.values()).cwiseAbs();
    a.kl[r.language] = kl_divergence(r.truth, r.predicted);
  }
  if (!acc.count(System::Base)) throw ConfigError("summary needs Base records");
  const auto& base = acc.at(System::Base);

  EvaluationSummary summary;
  summary.total_languages = static_cast<int>(base.abs_error.size());

  ErrorVector base_type_mae = ErrorVector::Zero();
  double base_mae = 0.0;
  double base_kl = 0.0;
  for (const auto& [lang, err] : base.abs_error) {
    base_type_mae += err;
    base_kl += base.kl.at(lang);
  }
  const double n_lang = static_cast<double>(base.abs_error.size());
  base_type_mae /= n_lang;
  base_mae = base_type_mae.mean();
  base_kl /= n_lang;

  std::stable_partition(order.begin(), order.end(), [](System s) { return s == System::Base; });
  for (auto system : order) {
    const auto& a = acc.at(system);
    if (a.abs_error.size() != base.abs_error.size()) {
      throw DataError(std::string(to_string(system)) + " does not cover the same languages as Base");
    }
    SystemSummary row;
    row.system = system;
    ErrorVector type_mae = ErrorVector::Zero();
    double kl = 0.0;
    for (const auto& [lang, err] : a.abs_error) {
      const auto bit = base.abs_error.find(lang);
      if (bit == base.abs_error.end()) throw DataError("no Base record for " + lang);
      type_mae += err;
      kl += a.kl.at(lang);
      if (system != System::Base) {
        if (err.mean() < bit->second.mean()) ++row.languages_improved;
        if (a.kl.at(lang) < base.kl.at(lang)) ++row.languages_improved_kl;
      }
    }
    type_mae /= n_lang;
    row.mae = 100.0 * type_mae.mean();
    row.mean_kl = kl / n_lang;
    if (system != System::Base) {
      for (Eigen::Index e = 0; e < type_mae.size(); ++e) {
        if (type_mae(e) < base_type_mae(e)) ++row.types_improved;
      }
      row.error_reduction = base_mae > 0.0 ? (100.0 * base_mae - row.mae) / (100.0 * base_mae) * 100.0 : 0.0;
    }
    summary.systems.push_back(row);
  }
  return summary;
}

std::vector<TopkColumn> topk_comparison(std::span<const PredictionRecord> records,
                                        const std::string& language,
                                        std::span<const System> systems, std::size_t k) {
  k = std::min(k, kNumErrorTypes);
  auto rank = [k](const ErrorDistribution& d) {
    std::vector<RankedError> all;
    for (const auto& info : kErrorTypes) all.push_back({info.type, d[info.type]});
    std::sort(all.begin(), all.end(), [](const RankedError& a, const RankedError& b) {
      if (a.fraction != b.fraction) return a.fraction > b.fraction;
      return code_of(a.type) < code_of(b.type);
    });
    all.resize(k);
    return all;
  };

  std::vector<TopkColumn> out;
  const PredictionRecord* any = nullptr;
  for (auto system : systems) {
    const auto it = std::find_if(records.begin(), records.end(), [&](const PredictionRecord& r) {
      return r.language == language && r.system == system;
    });
    if (it == records.end()) {
      throw LookupError("no " + std::string(to_string(system)) + " record for " + language);
    }
    any = &*it;
    out.push_back({std::string(to_string(system)), rank(it->predicted)});
  }
  if (!any) {
    const auto it = std::find_if(records.begin(), records.end(),
                                 [&](const PredictionRecord& r) { return r.language == language; });
    if (it == records.end()) throw LookupError("no records for " + language);
    any = &*it;
  }
  out.push_back({"True", rank(any->truth)});
  return out;
}

namespace {

void fingerprint_line(std::ostream& out, const std::string& fingerprint) {
  if (!fingerprint.empty()) out << "# " << fingerprint << '\n';
}

std::string count_cell(int n, int total) { return std::to_string(n) + "/" + std::to_string(total); }

}  // namespace

void write_summary_tsv(std::ostream& out, const EvaluationSummary& summary,
                       const std::string& fingerprint) {
  fingerprint_line(out, fingerprint);
  out << "# improvement counts: per-language mean over error types; per-type mean over languages\n";
  out << "system\tmae_x100\terror_reduction_pct\tlanguages_improved\ttypes_improved\tmean_kl\t"
         "languages_improved_kl\n";
  for (const auto& r : summary.systems) {
    const bool base = r.system == System::Base;
    out << to_string(r.system) << '\t' << format_double(r.mae, 4) << '\t'
        << (base ? "-" : format_double(r.error_reduction, 2)) << '\t'
        << (base ? "-" : count_cell(r.languages_improved, summary.total_languages)) << '\t'
        << (base ? "-" : count_cell(r.types_improved, summary.total_types)) << '\t'
        << format_double(r.mean_kl, 5) << '\t'
        << (base ? "-" : count_cell(r.languages_improved_kl, summary.total_languages)) << '\n';
  }
}

void write_summary_text(std::ostream& out, const EvaluationSummary& summary,
                        const std::string& fingerprint) {
  fingerprint_line(out, fingerprint);
  auto cell = [](const std::string& s) {
    std::string c = s;
    if (c.size() < 10) c.insert(0, 10 - c.size(), ' ');
    return c;
  };
  out << std::string(18, ' ');
  for (const auto& r : summary.systems) out << cell(std::string(to_string(r.system)));
  out << '\n';
  auto row = [&](const std::string& label, auto value) {
    std::string l = label;
    l.resize(18, ' ');
    out << l;
    for (const auto& r : summary.systems) out << cell(value(r));
    out << '\n';
  };
  row("MAE", [](const SystemSummary& r) { return format_double(r.mae, 2); });
  row("Error Reduction", [](const SystemSummary& r) {
    return r.system == System::Base ? std::string("-") : format_double(r.error_reduction, 1);
  });
  row("#Languages", [&](const SystemSummary& r) {
    return r.system == System::Base ? std::string("-") : count_cell(r.languages_improved, summary.total_languages);
  });
  row("#Mistakes", [&](const SystemSummary& r) {
    return r.system == System::Base ? std::string("-") : count_cell(r.types_improved, summary.total_types);
  });
  row("AVG D_KL", [](const SystemSummary& r) { return format_double(r.mean_kl, 3); });
  row("#Languages (KL)", [&](const SystemSummary& r) {
    return r.system == System::Base ? std::string("-")
                                    : count_cell(r.languages_improved_kl, summary.total_languages);
  });
}

void write_topk_tsv(std::ostream& out, const std::string& language,
                    const std::vector<TopkColumn>& columns, const std::string& fingerprint) {
  fingerprint_line(out, fingerprint);
  out << "# language " << language << '\n';
  out << "rank";
  for (const auto& c : columns) out << '\t' << c.label << "\t" << c.label << "_frac";
  out << '\n';
  const std::size_t k = columns.empty() ? 0 : columns.front().ranked.size();
  for (std::size_t i = 0; i < k; ++i) {
    out << (i + 1);
    for (const auto& c : columns) {
      out << '\t' << name_of(c.ranked[i].type) << '\t' << format_double(c.ranked[i].fraction, 2);
    }
    out << '\n';
  }
}

void write_topk_text(std::ostream& out, const std::string& language,
                     const std::vector<TopkColumn>& columns) {
  out << "Top errors for " << language << '\n';
  const std::size_t k = columns.empty() ? 0 : columns.front().ranked.size();
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  out << pad("Rank", 6);
  for (const auto& c : columns) out << pad(c.label, 28) << pad("Frac.", 7);
  out << '\n';
  for (std::size_t i = 0; i < k; ++i) {
    out << pad(std::to_string(i + 1), 6);
    for (const auto& c : columns) {
      out << pad(std::string(name_of(c.ranked[i].type)), 28)
          << pad(format_double(c.ranked[i].fraction, 2), 7);
    }
    out << '\n';
  }
}

void write_records_tsv(std::ostream& out, std::span<const PredictionRecord> records,
                       const std::string& fingerprint) {
  fingerprint_line(out, fingerprint);
  out << "language\tsystem\tcode\tpredicted\ttruth\tabs_error_x100\tfell_back\tneighbor\n";
  for (const auto& r : records) {
    for (const auto& info : kErrorTypes) {
      out << r.language << '\t' << to_string(r.system) << '\t' << info.code << '\t'
          << format_double(r.predicted[info.type], 6) << '\t' << format_double(r.truth[info.type], 6)
          << '\t' << format_double(100.0 * absolute_error(r.predicted, r.truth, info.type), 4) << '\t'
          << (r.fell_back ? 1 : 0) << '\t' << (r.neighbor.empty() ? "-" : r.neighbor) << '\n';
    }
  }
}

}  // namespace typoesl
