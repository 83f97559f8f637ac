#pragma once

// Questionnaire scoring (Raw TLX, adapted usability composite, Cronbach's
// alpha), per-session task metrics, and condition-level aggregation.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "medassist/core/error.hpp"
#include "medassist/core/format.hpp"
#include "medassist/session_log.hpp"
#include "medassist/usersim.hpp"

namespace medassist::metrics {

inline constexpr std::array<const char*, 6> kTlxItems{"mental", "physical", "temporal",
                                                      "performance", "effort", "frustration"};
inline constexpr std::array<int, 2> kReversedUsabilityItems{2, 4};  // 1-based

struct TlxResponse {
  std::array<double, 6> items{};
};

struct UsabilityResponse {
  std::array<double, 9> items{};
};

inline void check_range(double x, double lo, double hi, const std::string& what) {
  if (!(x >= lo && x <= hi))
    throw Error(Errc::OutOfRange, what + " = " + format_double(x) + " outside [" + format_double(lo) + ", " +
                                      format_double(hi) + "]");
}

/// Unweighted mean of the six items, mapped from [1, 10] to [0, 100].
inline double raw_tlx(const TlxResponse& r) {
  for (std::size_t i = 0; i < r.items.size(); ++i) check_range(r.items[i], 1.0, 10.0, std::string("TLX ") + kTlxItems[i]);
  const double raw = std::accumulate(r.items.begin(), r.items.end(), 0.0) / 6.0;
  return (raw - 1.0) / 9.0 * 100.0;
}

inline double reverse_code(double x) { return 6.0 - x; }

inline bool is_reversed_item(int one_based) {
  return std::find(kReversedUsabilityItems.begin(), kReversedUsabilityItems.end(), one_based) !=
         kReversedUsabilityItems.end();
}

inline UsabilityResponse reverse_coded(const UsabilityResponse& r) {
  UsabilityResponse out = r;
  for (int q : kReversedUsabilityItems) out.items[static_cast<std::size_t>(q - 1)] = reverse_code(r.items[static_cast<std::size_t>(q - 1)]);
  return out;
}

/// Q2 and Q4 reversed, participant mean mapped from [1, 5] to [0, 100].
inline double usability_composite(const UsabilityResponse& r) {
  for (std::size_t i = 0; i < r.items.size(); ++i) check_range(r.items[i], 1.0, 5.0, "Q" + std::to_string(i + 1));
  const auto rc = reverse_coded(r);
  const double raw = std::accumulate(rc.items.begin(), rc.items.end(), 0.0) / 9.0;
  return (raw - 1.0) / 4.0 * 100.0;
}

inline double population_variance(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

/// Rows are participants, columns items. `reversed` lists zero-based columns
/// to reverse-code (6 - x) before computing.
inline double cronbach_alpha(const std::vector<std::vector<double>>& matrix, const std::vector<std::size_t>& reversed = {}) {
  if (matrix.size() < 2) throw Error(Errc::DegenerateData, "alpha needs at least two participants");
  const std::size_t k = matrix.front().size();
  if (k < 2) throw Error(Errc::DegenerateData, "alpha needs at least two items");
  for (const auto& row : matrix)
    if (row.size() != k) throw Error(Errc::InvalidArgument, "ragged item matrix");
  std::vector<std::vector<double>> cols(k, std::vector<double>(matrix.size()));
  std::vector<double> totals(matrix.size(), 0.0);
  for (std::size_t p = 0; p < matrix.size(); ++p)
    for (std::size_t i = 0; i < k; ++i) {
      double x = matrix[p][i];
      if (std::find(reversed.begin(), reversed.end(), i) != reversed.end()) x = reverse_code(x);
      cols[i][p] = x;
      totals[p] += x;
    }
  double item_var = 0.0;
  for (const auto& c : cols) item_var += population_variance(c);
  const double total_var = population_variance(totals);
  if (total_var <= 0.0) throw Error(Errc::DegenerateData, "total-score variance is zero");
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var / total_var);
}

// ---------------------------------------------------------------------------
// Session metrics.

struct SessionMetrics {
  std::string condition;
  std::uint64_t seed{0};
  double time_to_locate{0.0};
  bool censored{false};
  int interaction_rounds{0};
  bool completed{false};
  std::string final_phase;
  std::vector<std::string> level_trace;  // distinct consecutive levels
  int confusion_events{0};
};

/// Time of the first Bottle fixation relative to the episode start, rounds as
/// accepted RecordPressed events answered by the robot, and the level trace.
inline SessionMetrics session_metrics(const log::SessionLog& lg, const std::vector<usersim::GazeSample>& gaze) {
  SessionMetrics m;
  m.condition = lg.header.condition;
  m.seed = lg.header.seed;
  m.completed = lg.completed();
  m.final_phase = lg.end.final_phase;
  auto it = std::find_if(gaze.begin(), gaze.end(),
                         [](const usersim::GazeSample& g) { return g.is_fixation && g.aoi == usersim::Aoi::Bottle; });
  if (it != gaze.end()) {
    m.time_to_locate = it->timestamp - lg.header.start_time;
  } else {
    m.time_to_locate = lg.header.episode_cap;
    m.censored = true;
  }
  std::vector<double> action_times;
  for (const auto& r : lg.records) {
    const auto kind = r.event.value("kind", std::string());
    if (kind == "RecordPressed" && r.accepted && !r.actions.empty()) ++m.interaction_rounds;
    if (r.accepted && (kind == "RecordPressed" || kind == "UserAction" || kind == "StartNavigationPressed"))
      action_times.push_back(r.t);
    if (m.level_trace.empty() || m.level_trace.back() != r.assist_level) m.level_trace.push_back(r.assist_level);
  }
  m.confusion_events = static_cast<int>(usersim::detect_confusion(gaze, action_times, 3.0).size());
  return m;
}

// ---------------------------------------------------------------------------
// Aggregation.

/// Type-7 (linear interpolation) sample quantile.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw Error(Errc::DegenerateData, "quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct Summary {
  std::size_t n{0};
  double mean{0.0};
  double median{0.0};
  double q1{0.0};
  double q3{0.0};
  double iqr{0.0};
  std::optional<double> ci_low;  // empty when n < 2
  std::optional<double> ci_high;
};

/// Mean with a Student-t 95% interval, median and type-7 quartiles.
inline Summary summarize(const std::vector<double>& x) {
  if (x.empty()) throw Error(Errc::DegenerateData, "summary of an empty sample");
  Summary s;
  s.n = x.size();
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(s.n);
  s.median = quantile(x, 0.5);
  s.q1 = quantile(x, 0.25);
  s.q3 = quantile(x, 0.75);
  s.iqr = s.q3 - s.q1;
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    boost::math::students_t dist(static_cast<double>(s.n - 1));
    const double half = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(s.n));
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
  }
  return s;
}

struct Questionnaire {
  std::string participant_id;
  std::string condition;
  std::optional<TlxResponse> tlx;
  std::optional<UsabilityResponse> usability;
};

struct ConditionReport {
  std::string condition;
  Summary time_to_locate;
  Summary rounds;
  std::size_t sessions{0};
  std::size_t completed{0};
  std::size_t censored{0};
  std::optional<Summary> tlx;
  std::optional<Summary> usability;
};

struct MetricsReport {
  std::vector<ConditionReport> conditions;  // sorted by condition label
  std::optional<double> usability_alpha;
  std::string alpha_note;
};

/// Per-condition summaries. Sessions are sorted before summarizing so the
/// result does not depend on input order.
inline MetricsReport aggregate(const std::vector<SessionMetrics>& sessions,
                               const std::vector<Questionnaire>& questionnaires = {}) {
  if (sessions.empty()) throw Error(Errc::EmptyCondition, "no sessions to aggregate");
  std::map<std::string, std::vector<const SessionMetrics*>> by_cond;
  for (const auto& s : sessions) by_cond[s.condition].push_back(&s);
  MetricsReport rep;
  for (auto& [cond, list] : by_cond) {
    std::sort(list.begin(), list.end(), [](const SessionMetrics* a, const SessionMetrics* b) {
      return std::tie(a->seed, a->time_to_locate, a->interaction_rounds) <
             std::tie(b->seed, b->time_to_locate, b->interaction_rounds);
    });
    ConditionReport c;
    c.condition = cond;
    std::vector<double> ttl, rounds;
    for (const auto* s : list) {
      ttl.push_back(s->time_to_locate);
      rounds.push_back(s->interaction_rounds);
      c.completed += s->completed;
      c.censored += s->censored;
    }
    c.sessions = list.size();
    c.time_to_locate = summarize(ttl);
    c.rounds = summarize(rounds);
    std::vector<double> tlx, usab;
    for (const auto& q : questionnaires) {
      if (q.condition != cond) continue;
      if (q.tlx) tlx.push_back(raw_tlx(*q.tlx));
      if (q.usability) usab.push_back(usability_composite(*q.usability));
    }
    std::sort(tlx.begin(), tlx.end());
    std::sort(usab.begin(), usab.end());
    if (!tlx.empty()) c.tlx = summarize(tlx);
    if (!usab.empty()) c.usability = summarize(usab);
    rep.conditions.push_back(std::move(c));
  }
  for (const auto& q : questionnaires)
    if (!by_cond.count(q.condition))
      throw Error(Errc::EmptyCondition, "questionnaire for condition " + q.condition + " has no sessions");
  std::vector<std::vector<double>> matrix;
  std::vector<const Questionnaire*> with_usability;
  for (const auto& q : questionnaires)
    if (q.usability) with_usability.push_back(&q);
  std::sort(with_usability.begin(), with_usability.end(), [](const Questionnaire* a, const Questionnaire* b) {
    return std::tie(a->condition, a->participant_id) < std::tie(b->condition, b->participant_id);
  });
  for (const auto* q : with_usability) matrix.emplace_back(q->usability->items.begin(), q->usability->items.end());
  if (!matrix.empty()) {
    try {
      rep.usability_alpha = cronbach_alpha(matrix, {1, 3});
    } catch (const Error& e) {
      rep.alpha_note = e.what();
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Files.

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    while (!s.empty() && s.back() == ' ') s.pop_back();
  }
  return out;
}
}  // namespace detail

/// Columns: participant_id, condition, the six TLX items (tlx_<item>) and
/// q1..q9. A response block with any blank cell is incomplete and dropped;
/// out-of-range ratings are errors.
inline std::vector<Questionnaire> parse_questionnaires(std::istream& is, const std::string& source = "<csv>") {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::ParseError, source + ": empty questionnaire file");
  const auto header = detail::split_csv_line(line);
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto pid = col("participant_id"), cond = col("condition");
  if (!pid || !cond) throw Error(Errc::ParseError, source + ":1: header needs participant_id and condition");
  std::array<std::optional<std::size_t>, 6> tlx_cols;
  std::array<std::optional<std::size_t>, 9> q_cols;
  for (std::size_t i = 0; i < 6; ++i) tlx_cols[i] = col(std::string("tlx_") + kTlxItems[i]);
  for (std::size_t i = 0; i < 9; ++i) q_cols[i] = col("q" + std::to_string(i + 1));

  std::vector<Questionnaire> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string at = source + ":" + std::to_string(lineno) + ": ";
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(Errc::ParseError, at + "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    Questionnaire q;
    q.participant_id = cells[*pid];
    q.condition = cells[*cond];
    if (q.condition != "A" && q.condition != "B") throw Error(Errc::ParseError, at + "condition must be A or B");
    auto read_block = [&](const auto& cols, auto& items, double lo, double hi) -> bool {
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (!cols[i] || cells[*cols[i]].empty()) return false;
        double v = 0.0;
        if (!parse_double(cells[*cols[i]], v)) throw Error(Errc::ParseError, at + "'" + header[*cols[i]] + "' is not a number");
        check_range(v, lo, hi, at + header[*cols[i]]);
        items[i] = v;
      }
      return true;
    };
    TlxResponse t;
    UsabilityResponse u;
    if (read_block(tlx_cols, t.items, 1.0, 10.0)) q.tlx = t;
    if (read_block(q_cols, u.items, 1.0, 5.0)) q.usability = u;
    out.push_back(std::move(q));
  }
  return out;
}

inline std::vector<Questionnaire> load_questionnaires(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, "cannot open questionnaire file '" + path + "'");
  return parse_questionnaires(in, path);
}

inline std::string csv_header() {
  return "condition,seed,time_to_locate,censored,interaction_rounds,completed,final_phase,confusion_events,level_trace";
}

inline std::string csv_row(const SessionMetrics& m) {
  std::string trace;
  for (const auto& l : m.level_trace) trace += (trace.empty() ? "" : ">") + l;
  return m.condition + "," + std::to_string(m.seed) + "," + format_double(m.time_to_locate) + "," +
         (m.censored ? "1" : "0") + "," + std::to_string(m.interaction_rounds) + "," + (m.completed ? "1" : "0") +
         "," + m.final_phase + "," + std::to_string(m.confusion_events) + "," + trace;
}

/// Plot-ready per-run CSV, rows sorted by (condition, seed).
inline std::string runs_csv(std::vector<SessionMetrics> sessions) {
  std::sort(sessions.begin(), sessions.end(), [](const SessionMetrics& a, const SessionMetrics& b) {
    return std::tie(a.condition, a.seed) < std::tie(b.condition, b.seed);
  });
  std::string out = csv_header() + "\n";
  for (const auto& m : sessions) out += csv_row(m) + "\n";
  return out;
}

inline std::string ci_text(const Summary& s, int digits) {
  if (!s.ci_low) return "n/a";
  return "[" + format_fixed(*s.ci_low, digits) + ", " + format_fixed(*s.ci_high, digits) + "]";
}

/// Long-form CSV: one row per (condition, metric).
inline std::string report_csv(const MetricsReport& r) {
  std::string out = "condition,metric,n,mean,median,q1,q3,iqr,ci_low,ci_high\n";
  auto row = [&](const std::string& cond, const char* metric, const Summary& s) {
    out += cond + "," + metric + "," + std::to_string(s.n) + "," + format_double(s.mean) + "," +
           format_double(s.median) + "," + format_double(s.q1) + "," + format_double(s.q3) + "," +
           format_double(s.iqr) + "," + (s.ci_low ? format_double(*s.ci_low) : "NA") + "," +
           (s.ci_high ? format_double(*s.ci_high) : "NA") + "\n";
  };
  for (const auto& c : r.conditions) {
    if (c.tlx) row(c.condition, "tlx", *c.tlx);
    row(c.condition, "time_to_locate", c.time_to_locate);
    row(c.condition, "interaction_rounds", c.rounds);
    if (c.usability) row(c.condition, "usability", *c.usability);
  }
  return out;
}

/// Human-readable summary with the same columns as the study table.
inline std::string summary_text(const MetricsReport& r) {
  std::ostringstream os;
  os << "Condition | TLX (M) (0-100) | Time-to-locate (s) median / mean | Robot-interaction rounds median / mean\n";
  os << "--------- | --------------- | -------------------------------- | -------------------------------------\n";
  for (const auto& c : r.conditions) {
    os << c.condition << " | " << (c.tlx ? format_fixed(c.tlx->mean, 2) : std::string("n/a")) << " | "
       << format_fixed(c.time_to_locate.median, 1) << " / " << format_fixed(c.time_to_locate.mean, 1) << " | "
       << format_fixed(c.rounds.median, 1) << " / " << format_fixed(c.rounds.mean, 1) << "\n";
  }
  os << "\n";
  for (const auto& c : r.conditions) {
    os << "Condition " << c.condition << ": " << c.sessions << " sessions, " << c.completed << " completed, "
       << c.censored << " censored at the episode cap\n";
    os << "  time-to-locate: mean " << format_fixed(c.time_to_locate.mean, 2) << " 95% CI "
       << ci_text(c.time_to_locate, 2) << ", median " << format_fixed(c.time_to_locate.median, 2) << ", IQR "
       << format_fixed(c.time_to_locate.iqr, 2) << "\n";
    os << "  rounds: mean " << format_fixed(c.rounds.mean, 2) << " 95% CI " << ci_text(c.rounds, 2) << ", median "
       << format_fixed(c.rounds.median, 2) << ", IQR " << format_fixed(c.rounds.iqr, 2) << "\n";
    if (c.tlx)
      os << "  TLX: mean " << format_fixed(c.tlx->mean, 2) << " 95% CI " << ci_text(*c.tlx, 2) << ", median "
         << format_fixed(c.tlx->median, 2) << ", IQR " << format_fixed(c.tlx->iqr, 2) << "\n";
    if (c.usability)
      os << "  usability: mean " << format_fixed(c.usability->mean, 2) << " 95% CI " << ci_text(*c.usability, 2)
         << ", median " << format_fixed(c.usability->median, 2) << ", IQR " << format_fixed(c.usability->iqr, 2)
         << "\n";
  }
  if (r.usability_alpha) os << "Cronbach's alpha (usability items): " << format_fixed(*r.usability_alpha, 3) << "\n";
  else if (!r.alpha_note.empty()) os << "Cronbach's alpha (usability items): n/a (" << r.alpha_note << ")\n";
  return os.str();
}

}  // namespace medassist::metrics
