#pragma once

#include "typoesl/error_types.hpp"
#include "typoesl/regression.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace typoesl {

/// |pred_e - truth_e| on the raw scale.
double absolute_error(const ErrorDistribution& pred, const ErrorDistribution& truth, ErrorType e);
/// D_KL(truth || pred), natural log.
double kl_divergence(const ErrorDistribution& truth, const ErrorDistribution& pred);

struct SystemSummary {
  System system = System::Base;
  double mae = 0.0;            // x100
  double error_reduction = 0.0;  // percent vs Base
  int languages_improved = 0;
  int types_improved = 0;
  double mean_kl = 0.0;
  int languages_improved_kl = 0;
};

struct EvaluationSummary {
  std::vector<SystemSummary> systems;  // Base first, then in first-seen order
  int total_languages = 0;
  int total_types = static_cast<int>(kNumErrorTypes);

  const SystemSummary& at(System s) const;
};

/// MAE over (language, type) cells; improvement counts compare per-language
/// mean error and per-type mean error against Base. Throws ConfigError
/// without Base records.
EvaluationSummary summarize(std::span<const PredictionRecord> records);

struct RankedError {
  ErrorType type;
  double fraction = 0.0;
};

struct TopkColumn {
  std::string label;  // system name or "True"
  std::vector<RankedError> ranked;
};

/// Top-k error types per requested system plus the truth, fraction-descending
/// with ties broken by code. k is capped at 20.
std::vector<TopkColumn> topk_comparison(std::span<const PredictionRecord> records,
                                        const std::string& language,
                                        std::span<const System> systems, std::size_t k);

/// All report writers start with "# " + fingerprint when it is nonempty.
void write_summary_tsv(std::ostream& out, const EvaluationSummary& summary,
                       const std::string& fingerprint = {});
void write_summary_text(std::ostream& out, const EvaluationSummary& summary,
                        const std::string& fingerprint = {});
void write_topk_tsv(std::ostream& out, const std::string& language,
                    const std::vector<TopkColumn>& columns, const std::string& fingerprint = {});
void write_topk_text(std::ostream& out, const std::string& language,
                     const std::vector<TopkColumn>& columns);
/// One row per (language, system, error type).
void write_records_tsv(std::ostream& out, std::span<const PredictionRecord> records,
                       const std::string& fingerprint = {});

}  // namespace typoesl
