#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "esprior/approx.hpp"
#include "esprior/bounds.hpp"
#include "esprior/errors.hpp"
#include "esprior/forward.hpp"
#include "esprior/switch_map.hpp"

namespace esp::cli {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Numbers go through the 12-digit text form so JSON and CSV agree.
json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt(v).c_str(), nullptr);
}

double bits(LogMass m) { return to_bits(m); }

Distribution weights_for(const RunConfig& cfg, std::size_t k) {
  if (cfg.weights.empty()) return Distribution::uniform(k);
  if (cfg.weights.size() != k)
    throw InputError("--weights has " + std::to_string(cfg.weights.size()) + " entries for " +
                     std::to_string(k) + " experts");
  return Distribution::from_probs(cfg.weights);
}

bool is_uniform(const Distribution& w) {
  const double u = 1.0 / static_cast<double>(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::abs(w.prob(i) - u) > 1e-12) return false;
  return true;
}

double require_alpha(const RunConfig& cfg) {
  if (!cfg.alpha) throw InputError("--model " + cfg.model + " needs --alpha");
  if (!(*cfg.alpha >= 0.0 && *cfg.alpha <= 1.0)) throw InputError("--alpha must lie in [0, 1]");
  return *cfg.alpha;
}

// Unique column names: repeated names get a 1-based ordinal suffix.
void uniquify(std::vector<std::string>& names) {
  std::map<std::string, int> count, seen;
  for (const auto& n : names) ++count[n];
  for (auto& n : names)
    if (count[n] > 1) n += "." + std::to_string(++seen[n]);
}

std::vector<std::string> expert_names(const ExpertList& xs) {
  std::vector<std::string> out;
  for (const auto& x : xs) out.push_back(x->name());
  return out;
}

ForwardOptions options(const RunConfig& cfg) {
  ForwardOptions o;
  o.trim = cfg.trim;
  return o;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << '\n';
}

}  // namespace

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, at == std::string_view::npos ? s.npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

double parse_number(std::string_view s, std::string_view what) {
  const std::string t(trim(s));
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || std::isnan(v))
    throw InputError(std::string(what) + ": '" + t + "' is not a number");
  return v;
}

std::vector<double> parse_numbers(std::string_view s, char sep, std::string_view what) {
  std::vector<double> out;
  for (const auto& part : split(s, sep)) out.push_back(parse_number(part, what));
  return out;
}

DataFile read_data(std::istream& in) {
  DataFile d;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.find(',') != std::string_view::npos)
      throw InputError("data line " + std::to_string(no) + ": expected one symbol, got '" +
                       std::string(t) + "'");
    d.symbols.emplace_back(t);
    d.lines.push_back(no);
  }
  return d;
}

TimeLaw parse_time_law(std::string_view spec) {
  const auto colon = spec.find(':');
  const auto head = spec.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (head == "inv-poly" && arg.empty()) return TimeLaw::inverse_polynomial();
  if (head == "elias" && arg.empty()) return TimeLaw::elias();
  if (head == "geometric") {
    const double r = parse_number(arg, "--pi-t geometric rate");
    if (!(r > 0.0 && r <= 1.0)) throw InputError("--pi-t geometric rate must lie in (0, 1]");
    return TimeLaw::geometric(r);
  }
  if (head == "uniform") {
    const auto ab = parse_numbers(arg, ',', "--pi-t uniform bounds");
    if (ab.size() != 2 || ab[0] < 1 || ab[1] < ab[0] || ab[0] != std::floor(ab[0]) ||
        ab[1] != std::floor(ab[1]))
      throw InputError("--pi-t uniform needs integers 1 <= a <= b, as uniform:a,b");
    return TimeLaw::uniform(static_cast<std::size_t>(ab[0]), static_cast<std::size_t>(ab[1]));
  }
  throw InputError("unknown --pi-t '" + std::string(spec) +
                   "' (inv-poly, geometric:<r>, uniform:<a>,<b>, elias)");
}

std::vector<BuiltinExpertSpec> parse_builtin_experts(std::string_view spec) {
  using Kind = BuiltinExpertSpec::Kind;
  static const std::map<std::string, Kind, std::less<>> kinds{{"const", Kind::constant},
                                                              {"kt", Kind::kt},
                                                              {"laplace", Kind::laplace},
                                                              {"markov", Kind::markov},
                                                              {"uniform", Kind::uniform}};
  std::vector<BuiltinExpertSpec> out;
  for (const auto& item : split(spec, ';')) {
    if (item.empty()) throw InputError("empty expert in '" + std::string(spec) + "'");
    BuiltinExpertSpec s;
    std::string_view body = item;
    if (const auto eq = body.find('='); eq != std::string_view::npos) {
      s.name = std::string(trim(body.substr(0, eq)));
      body = trim(body.substr(eq + 1));
    }
    const auto open = body.find('(');
    const auto kind = trim(body.substr(0, open));
    const auto it = kinds.find(kind);
    if (it == kinds.end()) throw InputError("unknown expert kind '" + std::string(kind) + "'");
    s.kind = it->second;
    if (open != std::string_view::npos) {
      if (body.back() != ')') throw InputError("unbalanced parenthesis in '" + item + "'");
      for (const auto& row : split(body.substr(open + 1, body.size() - open - 2), '|'))
        s.rows.push_back(parse_numbers(row, ',', "expert parameter"));
    }
    if (s.name.empty()) s.name = std::string(kind);
    out.push_back(std::move(s));
  }
  return out;
}

Advice read_advice(std::istream& in, AdviceMode mode, std::size_t steps) {
  Advice a;
  std::string line;
  std::size_t no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++no;
    if (!trim(line).empty()) header = split(trim(line), ',');
  }
  if (header.empty()) throw InputError("advice file has no header");

  // column -> (expert, outcome)
  std::vector<std::pair<std::size_t, std::size_t>> where;
  if (mode == AdviceMode::realized) {
    for (std::size_t c = 0; c < header.size(); ++c) where.emplace_back(c, 0);
    a.names = header;
  } else {
    std::map<std::string, std::size_t> label_at;
    std::vector<std::vector<std::string>> seen;
    for (const auto& h : header) {
      const auto colon = h.rfind(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == h.size())
        throw InputError("advice header: column '" + h + "' is not of the form expert:outcome");
      const auto name = h.substr(0, colon), label = h.substr(colon + 1);
      auto e = std::find(a.names.begin(), a.names.end(), name);
      if (e == a.names.end()) {
        a.names.push_back(name);
        seen.emplace_back();
        e = a.names.end() - 1;
      }
      const auto ei = static_cast<std::size_t>(e - a.names.begin());
      if (!label_at.count(label)) {
        label_at[label] = a.labels.size();
        a.labels.push_back(label);
      }
      if (std::count(seen[ei].begin(), seen[ei].end(), label))
        throw InputError("advice header: column '" + h + "' appears twice");
      seen[ei].push_back(label);
      where.emplace_back(ei, label_at[label]);
    }
    for (std::size_t e = 0; e < a.names.size(); ++e)
      if (seen[e].size() != a.labels.size())
        throw InputError("advice header: expert '" + a.names[e] + "' does not cover every outcome");
  }
  const std::size_t width = mode == AdviceMode::full ? a.labels.size() : 1;
  a.values.assign(a.names.size(), {});

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    ++row;
    if (row > steps)
      throw InputError("advice row " + std::to_string(row) + " (line " + std::to_string(no) +
                       "): data has only " + std::to_string(steps) + " symbols");
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size())
      throw InputError("advice line " + std::to_string(no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    for (auto& v : a.values) v.emplace_back(width, 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double p = parse_number(cells[c], "advice line " + std::to_string(no));
      if (!(p >= 0.0 && p <= 1.0))
        throw InputError("advice line " + std::to_string(no) + ": " + cells[c] +
                         " is not a probability");
      a.values[where[c].first].back()[where[c].second] = p;
    }
    if (mode == AdviceMode::full)
      for (std::size_t e = 0; e < a.names.size(); ++e) {
        double sum = 0.0;
        for (double p : a.values[e].back()) sum += p;
        if (std::abs(sum - 1.0) > 1e-6)
          throw InputError("advice line " + std::to_string(no) + ": expert '" + a.names[e] +
                           "' sums to " + fmt(sum));
      }
  }
  if (row < steps)
    throw InputError("advice row " + std::to_string(row + 1) + " is missing: data has " +
                     std::to_string(steps) + " symbols, advice has " + std::to_string(row) + " rows");
  return a;
}

Problem load(const RunConfig& cfg, const DataFile& data, std::istream* advice_in) {
  const bool from_file = cfg.experts.rfind("file:", 0) == 0;
  const bool builtin = cfg.experts.rfind("builtin:", 0) == 0;
  if (!from_file && !builtin)
    throw InputError("--experts must be file:<path> or builtin:<spec>");

  std::optional<Advice> advice;
  if (from_file) {
    if (!advice_in) throw InputError("cannot read advice file");
    advice = read_advice(*advice_in, cfg.advice_mode, data.symbols.size());
  } else if (cfg.advice_mode == AdviceMode::realized) {
    throw InputError("--advice-mode realized needs --experts file:<path>");
  }

  std::vector<std::string> labels = cfg.alphabet;
  if (labels.empty() && advice && cfg.advice_mode == AdviceMode::full) labels = advice->labels;
  if (labels.empty()) {
    std::set<std::string> s(data.symbols.begin(), data.symbols.end());
    labels.assign(s.begin(), s.end());
  }
  if (labels.empty()) throw InputError("empty data: give the outcomes with --alphabet");
  Problem p{Alphabet(labels), {}, {}, {}, {}, {}};
  for (std::size_t i = 0; i < data.symbols.size(); ++i) {
    const auto s = p.alphabet.find(data.symbols[i]);
    if (!s)
      throw InputError("data line " + std::to_string(data.lines[i]) + ": symbol '" +
                       data.symbols[i] + "' is not in the alphabet");
    p.data.push_back(*s);
  }
  const std::size_t nx = p.alphabet.size();

  if (builtin) {
    auto specs = parse_builtin_experts(std::string_view(cfg.experts).substr(8));
    std::vector<std::string> names;
    for (const auto& s : specs) names.push_back(s.name);
    uniquify(names);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      specs[i].name = names[i];
      p.experts.push_back(make_builtin_expert(specs[i], nx));
    }
  } else {
    auto names = advice->names;
    uniquify(names);
    for (std::size_t e = 0; e < names.size(); ++e) {
      const auto& rows = advice->values[e];
      if (cfg.advice_mode == AdviceMode::realized) {
        std::vector<LogMass> realized;
        for (const auto& r : rows) realized.push_back(LogMass::from_prob(r[0]));
        p.experts.push_back(realized_advice_expert(std::move(realized), p.data, nx, names[e]));
        continue;
      }
      if (advice->labels.size() != nx)
        throw InputError("advice covers " + std::to_string(advice->labels.size()) +
                         " outcomes, the alphabet has " + std::to_string(nx));
      std::vector<Distribution> ds;
      for (const auto& r : rows) {
        std::vector<double> q(nx, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
          const auto at = p.alphabet.find(advice->labels[j]);
          if (!at) throw InputError("advice outcome '" + advice->labels[j] + "' is not in the alphabet");
          q[*at] = r[j];
          sum += r[j];
        }
        for (auto& v : q) v /= sum;
        ds.push_back(Distribution::from_probs(q));
      }
      p.experts.push_back(tabulated_expert(std::move(ds), names[e]));
    }
  }
  const std::size_t k = p.experts.size();
  if (k == 0) throw InputError("no experts");
  p.model_experts = p.experts;

  const auto& m = cfg.model;
  if (m == "bayes") {
    p.model = bayes(weights_for(cfg, k));
  } else if (m == "fixed-elementwise") {
    p.model = fixed_elementwise(weights_for(cfg, k));
  } else if (m == "universal-elementwise") {
    p.model = universal_elementwise(k);
  } else if (m == "fixed-share") {
    p.model = fixed_share(weights_for(cfg, k), require_alpha(cfg));
  } else if (m == "universal-share") {
    p.model = universal_share(weights_for(cfg, k));
  } else if (m == "overconfident") {
    p.model = overconfident(weights_for(cfg, k), require_alpha(cfg));
    p.model_experts = append_safe_expert(p.experts, nx);
  } else if (m == "switch") {
    if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw InputError("--theta must lie in (0, 1]");
    p.switch_config = SwitchConfig{cfg.theta, parse_time_law(cfg.pi_t), weights_for(cfg, k)};
    p.model = switch_model(*p.switch_config);
  } else if (m == "run-length") {
    p.model = run_length(parse_time_law(cfg.pi_t), weights_for(cfg, k));
  } else {
    throw InputError("unknown --model '" + m + "'");
  }
  return p;
}

void cmd_evaluate(const RunConfig& cfg, const Problem& p, std::ostream& out) {
  const auto r = forward_marginal(p.model, p.model_experts, p.data, options(cfg));
  const auto names = expert_names(p.model_experts);
  const bool outcomes = !r.next_outcome.empty() || (p.data.empty() && cfg.advice_mode == AdviceMode::full);
  const std::size_t n = p.data.size();

  if (cfg.format == Format::json) {
    json steps = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      json s{{"step", i + 1},
             {"symbol", p.alphabet.label(p.data[i])},
             {"probability", num(r.step_probability[i].prob())},
             {"loss_bits", num(bits(r.step_probability[i]))}};
      json w = json::object();
      for (std::size_t e = 0; e < names.size(); ++e) w[names[e]] = num(r.next_expert[i].prob(e));
      s["next_expert"] = w;
      if (outcomes) {
        json o = json::object();
        for (std::size_t x = 0; x < p.alphabet.size(); ++x)
          o[p.alphabet.label(x)] = num(r.next_outcome[i].prob(x));
        s["next_outcome"] = o;
      }
      steps.push_back(s);
    }
    json after = json::object();
    for (std::size_t e = 0; e < names.size(); ++e) after[names[e]] = num(r.next_expert.back().prob(e));
    json doc{{"model", p.model->name()},
             {"n", n},
             {"total_bits", num(bits(r.marginal))},
             {"steps", steps},
             {"next_expert_after", after},
             {"transitions", std::accumulate(r.transitions_per_level.begin(),
                                             r.transitions_per_level.end(), std::size_t{0})},
             {"peak_weights", r.peak_weights}};
    out << doc.dump(2) << '\n';
    return;
  }

  std::vector<std::string> head{"step", "symbol", "probability", "loss_bits"};
  for (const auto& nm : names) head.push_back("expert:" + nm);
  if (outcomes)
    for (const auto& l : p.alphabet.labels()) head.push_back("outcome:" + l);
  write_csv_row(out, head);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{std::to_string(i + 1), p.alphabet.label(p.data[i]),
                                 fmt(r.step_probability[i].prob()), fmt(bits(r.step_probability[i]))};
    for (std::size_t e = 0; e < names.size(); ++e) row.push_back(fmt(r.next_expert[i].prob(e)));
    if (outcomes)
      for (std::size_t x = 0; x < p.alphabet.size(); ++x) row.push_back(fmt(r.next_outcome[i].prob(x)));
    write_csv_row(out, row);
  }
  std::vector<std::string> total{"total", "", fmt(r.marginal.prob()), fmt(bits(r.marginal))};
  total.resize(head.size());
  write_csv_row(out, total);
}

void cmd_posterior(const RunConfig& cfg, const Problem& p, std::ostream& out) {
  const auto g = posterior_experts(*p.model, p.model_experts, p.data);
  const auto names = expert_names(p.model_experts);
  if (cfg.format == Format::json) {
    json rows = json::array();
    for (std::size_t i = 0; i < g.steps(); ++i) {
      json row = json::array();
      for (std::size_t e = 0; e < g.experts(); ++e) row.push_back(num(g.prob(i, e)));
      rows.push_back(row);
    }
    out << json{{"experts", names}, {"rows", rows}}.dump(2) << '\n';
    return;
  }
  write_csv_row(out, names);
  for (std::size_t i = 0; i < g.steps(); ++i) {
    std::vector<std::string> row;
    for (std::size_t e = 0; e < g.experts(); ++e) row.push_back(fmt(g.prob(i, e)));
    write_csv_row(out, row);
  }
}

void cmd_map(const RunConfig& cfg, const Problem& p, std::ostream& out) {
  std::vector<ExpertIndex> seq;
  LogMass joint;
  if (p.switch_config) {
    const auto r = switch_map(*p.switch_config, p.experts, p.data);
    seq = r.sequence;
    joint = r.probability;
  } else if (p.model->unambiguous()) {
    const auto r = viterbi_unambiguous(*p.model, p.model_experts, p.data);
    seq = r.experts;
    joint = r.joint;
  } else {
    throw UnsupportedError("map is not available for model '" + cfg.model +
                           "': it is ambiguous (use switch or an unambiguous model)");
  }
  const auto names = expert_names(p.model_experts);
  if (cfg.format == Format::json) {
    json s = json::array();
    for (auto e : seq) s.push_back(names[e]);
    out << json{{"joint_bits", num(bits(joint))}, {"sequence", s}}.dump(2) << '\n';
    return;
  }
  if (seq.empty()) return;
  write_csv_row(out, {"step", "expert"});
  for (std::size_t i = 0; i < seq.size(); ++i) write_csv_row(out, {std::to_string(i + 1), names[seq[i]]});
}

namespace {

Partition partition_of(const ExpertList& xs, std::span<const Symbol> data,
                       const std::vector<ExpertIndex>& seq) {
  Partition part;
  LogMass like = LogMass::one();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i == 0 || seq[i] != seq[i - 1]) {
      part.starts.push_back(i);
      part.experts.push_back(seq[i]);
    }
    like *= emission_row(xs, data.first(i), data[i])[seq[i]];
  }
  part.loss_bits = bits(like);
  return part;
}

// Minimum over a 1024-point grid of a one-parameter family's loss.
template <class Make>
std::pair<double, double> grid_min(Make make, const ExpertList& xs, std::span<const Symbol> data,
                                   const ForwardOptions& o) {
  double best = std::numeric_limits<double>::infinity(), at = 0.0;
  for (int j = 0; j < 1024; ++j) {
    const double a = j / 1023.0;
    try {
      const double b = bits(forward_marginal(make(a), xs, data, o).marginal);
      if (b < best) best = b, at = a;
    } catch (const ZeroMarginalError&) {
    }
  }
  return {best, at};
}

}  // namespace

std::vector<BoundReport> bound_reports(const RunConfig& cfg, const Problem& p) {
  const std::size_t n = p.data.size(), k = p.experts.size();
  const auto o = options(cfg);
  if (cfg.model == "fixed-elementwise")
    throw UnsupportedError("no loss bound is available for fixed-elementwise");
  const double model_bits = bits(forward_marginal(p.model, p.model_experts, p.data, o).marginal);
  const Distribution w = weights_for(cfg, k);

  BoundReport r;
  r.model = cfg.model;
  r.n = n;
  r.k = k;

  if (cfg.model == "universal-share") {
    auto [best, at] = grid_min([&](double a) { return fixed_share(w, a); }, p.experts, p.data, o);
    r.comparator = "fixed-share alpha grid (1024)";
    r.alpha = at;
    r.measured_bits = model_bits - best;
    r.bound_bits = universal_share_bound(n);
    return {r};
  }
  if (cfg.model == "universal-elementwise") {
    r.asserted = false;
    r.bound_bits = unimix_bound(k, n, cfg.unimix_c);
    if (k == 2) {
      auto [best, at] = grid_min(
          [&](double a) {
            const std::vector<double> q{a, 1.0 - a};
            return fixed_elementwise(Distribution::from_probs(q));
          },
          p.experts, p.data, o);
      r.comparator = "fixed-elementwise grid (1024)";
      r.alpha = at;
      r.measured_bits = model_bits - best;
    } else {
      const auto part = best_partition(p.experts, p.data, 1);
      r.comparator = "best expert";
      r.measured_bits = model_bits - part.loss_bits;
    }
    r.note = "constant c = " + fmt(cfg.unimix_c) + " is not known in closed form; reported only";
    return {r};
  }

  if (cfg.model == "overconfident") {
    const ExpertIndex safe = k;
    std::vector<ExpertIndex> seq;
    if (cfg.comparator.rfind("seq:", 0) == 0) {
      for (double v : parse_numbers(cfg.comparator.substr(4), ',', "--comparator"))
        seq.push_back(static_cast<ExpertIndex>(v));
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (ExpertIndex e = 0; e < k; ++e) {
        std::vector<ExpertIndex> s;
        for (std::size_t i = 0; i < n; ++i) {
          const auto row = emission_row(p.model_experts, std::span(p.data).first(i), p.data[i]);
          s.push_back(row[safe] > row[e] ? safe : e);
        }
        const double b = partition_of(p.model_experts, p.data, s).loss_bits - std::log2(w.prob(e));
        if (b < best) best = b, seq = s;
      }
    }
    if (seq.size() != n) throw InputError("--comparator sequence must have one expert per symbol");
    std::optional<ExpertIndex> e;
    std::size_t safe_steps = 0;
    for (auto s : seq) {
      if (s > safe) throw InputError("--comparator expert index out of range");
      if (s == safe) {
        ++safe_steps;
      } else if (e && *e != s) {
        throw InputError("overconfident comparator may use one expert besides the safe one");
      } else {
        e = s;
      }
    }
    const auto part = partition_of(p.model_experts, p.data, seq);
    r.comparator = "expert " + std::to_string(e.value_or(0)) + " with safe steps";
    r.alpha = *cfg.alpha;
    r.alpha_star = n ? static_cast<double>(safe_steps) / static_cast<double>(n) : 0.0;
    r.m = part.blocks();
    r.measured_bits = model_bits - part.loss_bits;
    r.bound_bits = overconfident_bound(w, e.value_or(0), n, r.alpha, r.alpha_star);
    return {r};
  }

  Partition part;
  if (cfg.comparator.rfind("best:", 0) == 0) {
    const double m = parse_number(cfg.comparator.substr(5), "--comparator");
    if (!(m >= 1) || m != std::floor(m)) throw InputError("--comparator best:<m> needs m >= 1");
    part = best_partition(p.experts, p.data, static_cast<std::size_t>(m));
    r.comparator = "best partition (<= " + fmt(m) + " blocks)";
  } else if (cfg.comparator.rfind("seq:", 0) == 0) {
    std::vector<ExpertIndex> seq;
    for (double v : parse_numbers(cfg.comparator.substr(4), ',', "--comparator")) {
      if (v < 0 || v >= static_cast<double>(k) || v != std::floor(v))
        throw InputError("--comparator expert index out of range");
      seq.push_back(static_cast<ExpertIndex>(v));
    }
    if (seq.size() != n) throw InputError("--comparator sequence must have one expert per symbol");
    part = partition_of(p.experts, p.data, seq);
    r.comparator = "given sequence";
  } else {
    throw InputError("--comparator must be best:<m> or seq:<e1,e2,...>");
  }
  if (n == 0) part.starts.clear();
  r.m = part.blocks();
  r.t_m = part.last_start();
  r.measured_bits = model_bits - part.loss_bits;
  const std::size_t m = std::max<std::size_t>(r.m, 1);

  if (cfg.model == "bayes") {
    if (r.m > 1) {
      r.bound_bits = std::numeric_limits<double>::infinity();
      r.asserted = false;
      r.note = "comparator switches experts; the mixture bound needs a single expert";
    } else {
      r.bound_bits = bayes_bound(w, part.experts.empty() ? 0 : part.experts[0]);
    }
  } else if (cfg.model == "fixed-share") {
    r.alpha = *cfg.alpha;
    r.alpha_star = switch_rate(n, m);
    r.bound_bits = fixed_share_bound(n, m, k, r.alpha, r.alpha_star);
    if (!is_uniform(w)) r.asserted = false, r.note = "bound assumes uniform weights";
  } else if (cfg.model == "switch") {
    r.bound_bits = switch_bound(static_cast<double>(m), static_cast<double>(r.t_m), k);
    if (!is_uniform(w) || cfg.theta != 0.5 || cfg.pi_t != "inv-poly")
      r.asserted = false, r.note = "bound assumes theta 0.5, inv-poly and uniform weights";
  } else if (cfg.model == "run-length") {
    r.bound_bits = run_length_bound(static_cast<double>(n), static_cast<double>(m), k);
    if (!is_uniform(w) || cfg.pi_t != "elias")
      r.asserted = false, r.note = "bound assumes the elias law and uniform weights";
  }
  return {r};
}

void cmd_bounds(const RunConfig& cfg, const Problem& p, std::ostream& out) {
  const auto reports = bound_reports(cfg, p);
  if (cfg.format == Format::json) {
    json rows = json::array();
    for (const auto& r : reports)
      rows.push_back({{"model", r.model},
                      {"comparator", r.comparator},
                      {"n", r.n},
                      {"m", r.m},
                      {"t_m", r.t_m},
                      {"k", r.k},
                      {"alpha", num(r.alpha)},
                      {"alpha_star", num(r.alpha_star)},
                      {"measured_bits", num(r.measured_bits)},
                      {"bound_bits", num(r.bound_bits)},
                      {"asserted", r.asserted},
                      {"satisfied", r.satisfied()},
                      {"note", r.note}});
    out << rows.dump(2) << '\n';
    return;
  }
  write_csv_row(out, {"model", "comparator", "n", "m", "t_m", "k", "alpha", "alpha_star",
                      "measured_bits", "bound_bits", "asserted", "satisfied", "note"});
  for (const auto& r : reports)
    write_csv_row(out, {r.model, r.comparator, std::to_string(r.n), std::to_string(r.m),
                        std::to_string(r.t_m), std::to_string(r.k), fmt(r.alpha), fmt(r.alpha_star),
                        fmt(r.measured_bits), fmt(r.bound_bits), r.asserted ? "yes" : "no",
                        r.satisfied() ? "yes" : "no", r.note});
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expert-sequence priors as hidden Markov models"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string data_path, out_path, weights, alphabet, mode = "full", format = "csv";

  const std::vector<std::pair<std::string, std::string>> commands{
      {"evaluate", "log-loss and per-step predictions"},
      {"posterior", "per-step posterior on experts given all data"},
      {"map", "most probable expert sequence"},
      {"bounds", "measured regret against the loss bound"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("data", data_path, "data file, one symbol per line")->required();
    sub->add_option("--model", cfg.model)
        ->check(CLI::IsMember({"bayes", "fixed-elementwise", "universal-elementwise", "fixed-share",
                               "universal-share", "overconfident", "switch", "run-length"}));
    sub->add_option("--alpha", cfg.alpha);
    sub->add_option("--theta", cfg.theta);
    sub->add_option("--pi-t", cfg.pi_t, "inv-poly | geometric:<r> | uniform:<a>,<b> | elias");
    sub->add_option("--weights", weights, "comma-separated prior on experts");
    sub->add_option("--experts", cfg.experts, "file:<path> | builtin:<spec>");
    sub->add_option("--advice-mode", mode)->check(CLI::IsMember({"full", "realized"}));
    sub->add_option("--alphabet", alphabet, "comma-separated outcomes");
    sub->add_option("--trim", cfg.trim);
    sub->add_option("--out", out_path);
    sub->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--comparator", cfg.comparator, "best:<m> | seq:<e1,e2,...>");
    sub->add_option("--unimix-c", cfg.unimix_c);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!weights.empty()) cfg.weights = parse_numbers(weights, ',', "--weights");
    if (!alphabet.empty()) cfg.alphabet = split(alphabet, ',');
    cfg.advice_mode = mode == "realized" ? AdviceMode::realized : AdviceMode::full;
    cfg.format = format == "json" ? Format::json : Format::csv;

    std::ifstream din(data_path);
    if (!din) throw InputError("cannot open data file '" + data_path + "'");
    const auto data = read_data(din);
    std::ifstream ain;
    if (cfg.experts.rfind("file:", 0) == 0) {
      ain.open(cfg.experts.substr(5));
      if (!ain) throw InputError("cannot open advice file '" + cfg.experts.substr(5) + "'");
    }
    const auto problem = load(cfg, data, ain.is_open() ? &ain : nullptr);

    std::ostringstream buf;
    const auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "evaluate") cmd_evaluate(cfg, problem, buf);
    if (sub->get_name() == "posterior") cmd_posterior(cfg, problem, buf);
    if (sub->get_name() == "map") cmd_map(cfg, problem, buf);
    if (sub->get_name() == "bounds") cmd_bounds(cfg, problem, buf);

    if (out_path.empty()) {
      out << buf.str();
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw InputError("cannot write '" + out_path + "'");
      f << buf.str();
    }
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ZeroMarginalError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const StateBudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace esp::cli
