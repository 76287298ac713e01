#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esprior/bounds.hpp"
#include "esprior/core.hpp"
#include "esprior/hmm.hpp"
#include "esprior/models.hpp"
#include "esprior/time_law.hpp"

namespace esp::cli {

enum class AdviceMode { full, realized };
enum class Format { csv, json };

struct RunConfig {
  std::string model = "bayes";
  std::optional<double> alpha;
  double theta = 0.5;
  std::string pi_t = "inv-poly";
  std::vector<double> weights;  // empty: uniform
  std::string experts = "builtin:uniform";
  AdviceMode advice_mode = AdviceMode::full;
  std::vector<std::string> alphabet;  // empty: sorted data symbols
  std::optional<double> trim;
  Format format = Format::csv;
  std::string comparator = "best:1";
  double unimix_c = 1.1;
};

/// Symbols of a data file, one per line. Blank lines are skipped; `lines`
/// keeps the file line of every symbol for error messages.
struct DataFile {
  std::vector<std::string> symbols;
  std::vector<std::size_t> lines;
};

DataFile read_data(std::istream& in);

std::vector<std::string> split(std::string_view s, char sep);
double parse_number(std::string_view s, std::string_view what);
std::vector<double> parse_numbers(std::string_view s, char sep, std::string_view what);

TimeLaw parse_time_law(std::string_view spec);

/// `const(0.8,0.2);kt;name=markov(0.5,0.5|0.9,0.1|0.2,0.8)`
std::vector<BuiltinExpertSpec> parse_builtin_experts(std::string_view spec);

/// Advice CSV. Realized mode: one column per expert holding the
/// probability of the outcome that occurred. Full mode: one column per
/// expert and outcome, headed `expert:label`.
struct Advice {
  std::vector<std::string> names;
  std::vector<std::string> labels;  // full mode only, header order
  /// [expert][step][outcome], or [expert][step][0] in realized mode.
  std::vector<std::vector<std::vector<double>>> values;
};

Advice read_advice(std::istream& in, AdviceMode mode, std::size_t steps);

/// Everything a subcommand needs after ingestion.
struct Problem {
  Alphabet alphabet;
  std::vector<Symbol> data;
  ExpertList experts;
  /// Experts as seen by the model (the overconfident model adds one).
  ExpertList model_experts;
  ModelPtr model;
  std::optional<SwitchConfig> switch_config;
};

Problem load(const RunConfig& cfg, const DataFile& data, std::istream* advice);

std::string fmt(double v);

void cmd_evaluate(const RunConfig& cfg, const Problem& p, std::ostream& out);
void cmd_posterior(const RunConfig& cfg, const Problem& p, std::ostream& out);
void cmd_map(const RunConfig& cfg, const Problem& p, std::ostream& out);
/// One report row for the configured model and comparator.
std::vector<BoundReport> bound_reports(const RunConfig& cfg, const Problem& p);
void cmd_bounds(const RunConfig& cfg, const Problem& p, std::ostream& out);

/// Full command line, including the program name. Returns the exit code:
/// 0 success, 2 input error, 3 zero marginal, 4 unsupported.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace esp::cli
