#include "musinger/experiment/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "musinger/core/error.hpp"
#include "musinger/melody/melody.hpp"

namespace musinger::experiment {

std::vector<MelodyId> build_session_plan(std::span<const MelodyId> melodies, int reps, std::uint64_t seed) {
  if (reps < 1) throw Error(Errc::InvalidInput, "reps must be >= 1");
  std::vector<MelodyId> plan;
  plan.reserve(melodies.size() * static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) plan.insert(plan.end(), melodies.begin(), melodies.end());
  std::mt19937_64 rng(seed);
  std::shuffle(plan.begin(), plan.end(), rng);
  return plan;
}

std::vector<TrialRecord> run_session(std::span<const MelodyId> plan, const SessionOptions& options,
                                     const Presenter& presenter, const AnswerSource& answers) {
  std::vector<TrialRecord> records;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    RhythmPattern stimulus = melody::builtin_melody(plan[i]);
    stimulus.melody_id.reset();
    Prompt prompt;
    prompt.trial_index = static_cast<int>(i);
    prompt.perceived = presenter(stimulus);
    prompt.perceived.melody_id.reset();
    const auto answer = answers(prompt);
    if (!answer) {
      if (options.log)
        options.log("trial " + std::to_string(i) + " for " + options.participant +
                    ": no answer before timeout, excluded");
      continue;
    }
    records.push_back({options.participant, options.condition, static_cast<int>(i), plan[i], *answer});
  }
  return records;
}

int ConfusionMatrix::row_total(MelodyId presented) const noexcept {
  int sum = 0;
  for (int c : counts[static_cast<std::size_t>(melody_index(presented))]) sum += c;
  return sum;
}

int ConfusionMatrix::total() const noexcept {
  int sum = 0;
  for (const auto& row : counts)
    for (int c : row) sum += c;
  return sum;
}

int ConfusionMatrix::correct() const noexcept {
  int sum = 0;
  for (std::size_t i = 0; i < 4; ++i) sum += counts[i][i];
  return sum;
}

ConfusionMatrix confusion_matrix(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(Errc::EmptyData, "no trial records");
  ConfusionMatrix m;
  for (const auto& r : records)
    ++m.counts[static_cast<std::size_t>(melody_index(r.presented))][static_cast<std::size_t>(melody_index(r.answered))];
  for (std::size_t i = 0; i < 4; ++i) {
    int row = 0;
    for (int c : m.counts[i]) row += c;
    if (row == 0) continue;
    for (std::size_t j = 0; j < 4; ++j) m.proportions[i][j] = static_cast<double>(m.counts[i][j]) / row;
  }
  return m;
}

double overall_accuracy(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(Errc::EmptyData, "no trial records");
  const auto correct = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct(); });
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double round_half_away(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  // Decimal ties such as 2.675 are stored slightly below the tie.
  const double scaled = value * scale;
  const double nudged = scaled + std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled);
  return std::trunc(nudged + std::copysign(0.5, nudged)) / scale;
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, round_half_away(value, digits));
  return buf;
}

void write_trial_log(std::ostream& os, std::span<const TrialRecord> records, bool with_header) {
  if (with_header) os << kTrialLogHeader << '\n';
  for (const auto& r : records)
    os << r.participant << ',' << condition_label(r.condition) << ',' << r.trial_index << ','
       << melody_letter(r.presented) << ',' << melody_letter(r.answered) << '\n';
}

std::vector<TrialRecord> read_trial_log(std::istream& is) {
  std::vector<TrialRecord> out;
  std::string line;
  int line_no = 0;
  bool header = false;
  std::set<std::tuple<std::string, int, int>> seen;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kTrialLogHeader)
        throw Error(Errc::BadFormat, std::string("trial log: expected header \"") + kTrialLogHeader + "\"", line_no);
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    const std::string where = "trial log line " + std::to_string(line_no) + ": ";
    if (fields.size() != 5) throw Error(Errc::BadFormat, where + "expected 5 fields", line_no);
    TrialRecord r;
    r.participant = fields[0];
    if (r.participant.empty()) throw Error(Errc::BadFormat, where + "empty participant", line_no);
    const auto cond = condition_from_label(fields[1]);
    if (!cond) throw Error(Errc::BadFormat, where + "condition must be none or white", line_no);
    r.condition = *cond;
    try {
      std::size_t used = 0;
      r.trial_index = std::stoi(fields[2], &used);
      if (used != fields[2].size() || r.trial_index < 0) throw std::invalid_argument("index");
    } catch (const std::exception&) {
      throw Error(Errc::BadFormat, where + "bad trial_index", line_no);
    }
    auto letter = [&](const std::string& s) {
      if (s.size() != 1 || s[0] < 'A' || s[0] > 'D')
        throw Error(Errc::BadFormat, where + "melody must be one of A-D", line_no);
      return *melody_from_letter(s[0]);
    };
    r.presented = letter(fields[3]);
    r.answered = letter(fields[4]);
    if (!seen.emplace(r.participant, static_cast<int>(r.condition.noise), r.trial_index).second)
      throw Error(Errc::BadFormat, where + "duplicate trial_index for participant/condition", line_no);
    out.push_back(r);
  }
  if (!header) throw Error(Errc::BadFormat, "trial log is empty", 1);
  return out;
}

SubjectScores subject_scores(std::span<const TrialRecord> records, Condition condition,
                             std::vector<std::string>* participants) {
  std::map<std::string, std::array<std::pair<int, int>, 4>> tally;  // (correct, total)
  for (const auto& r : records) {
    if (r.condition != condition) continue;
    auto& cell = tally[r.participant][static_cast<std::size_t>(melody_index(r.presented))];
    cell.first += r.correct() ? 1 : 0;
    cell.second += 1;
  }
  SubjectScores out;
  if (participants) participants->clear();
  for (const auto& [who, cells] : tally) {
    std::array<double, 4> row{};
    for (std::size_t m = 0; m < 4; ++m)
      row[m] = cells[m].second ? static_cast<double>(cells[m].first) / cells[m].second
                               : std::numeric_limits<double>::quiet_NaN();
    out.push_back(row);
    if (participants) participants->push_back(who);
  }
  return out;
}

namespace {

bool complete(const std::array<double, 4>& row) {
  return std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); });
}

}  // namespace

AnalysisReport analyze(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(Errc::EmptyData, "no trial records");
  AnalysisReport report;
  std::map<std::string, std::array<std::array<double, 4>, 2>> by_subject;
  std::map<std::string, std::array<bool, 2>> has_condition;

  for (NoiseCondition nc : {NoiseCondition::NoNoise, NoiseCondition::WhiteNoise}) {
    const Condition cond{nc};
    std::vector<TrialRecord> subset;
    for (const auto& r : records)
      if (r.condition == cond) subset.push_back(r);
    if (subset.empty()) continue;

    ConditionReport cr;
    cr.condition = cond;
    cr.records = static_cast<int>(subset.size());
    cr.confusion = confusion_matrix(subset);
    cr.accuracy = overall_accuracy(subset);

    std::vector<std::string> who;
    const auto scores = subject_scores(subset, cond, &who);
    cr.participants = static_cast<int>(scores.size());
    for (std::size_t s = 0; s < scores.size(); ++s) {
      const auto ci = static_cast<std::size_t>(nc == NoiseCondition::NoNoise ? 0 : 1);
      by_subject[who[s]][ci] = scores[s];
      has_condition[who[s]][ci] = complete(scores[s]);
    }

    std::vector<std::vector<double>> groups(4);
    std::vector<std::vector<double>> table;
    for (const auto& row : scores) {
      for (std::size_t m = 0; m < 4; ++m)
        if (!std::isnan(row[m])) groups[m].push_back(row[m]);
      if (complete(row)) table.emplace_back(row.begin(), row.end());
    }
    const bool enough = std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() >= 2; });
    if (!enough) {
      cr.anova_note = "insufficient data: each melody needs scores from at least 2 participants";
    } else {
      cr.anova_between = anova_one_way(groups);
      if (table.size() >= 2) cr.anova_within = anova_within_one_way(table);
    }
    report.conditions.push_back(cr);
  }

  Table3 table;
  for (const auto& [who, flags] : has_condition) {
    if (!flags[0] || !flags[1]) continue;
    const auto& sc = by_subject[who];
    std::vector<std::vector<double>> cell(4, std::vector<double>(2));
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t c = 0; c < 2; ++c) cell[m][c] = sc[c][m];
    table.push_back(cell);
  }
  if (table.size() >= 2) {
    report.two_factor = anova_two_factor(table, "melody", "condition");
    report.two_factor_between = anova_two_factor_between(table, "melody", "condition");
  } else {
    report.two_factor_note =
        "insufficient data: needs at least 2 participants with every melody in both conditions";
  }
  return report;
}

namespace {

std::string anova_line(const AnovaResult& a) {
  std::ostringstream os;
  os << "F(" << a.df_between << ", " << a.df_error << ") = ";
  if (std::isinf(a.F))
    os << "inf";
  else
    os << format_fixed(a.F, 4);
  os << ", p = " << format_fixed(a.p, 4) << (a.significant() ? "  (significant at alpha = " : "  (not significant at alpha = ")
     << a.alpha << ")";
  return os.str();
}

nlohmann::json anova_json(const AnovaResult& a) {
  nlohmann::json j;
  j["effect"] = a.effect;
  j["F"] = std::isinf(a.F) ? nlohmann::json("inf") : nlohmann::json(a.F);
  j["df"] = {a.df_between, a.df_error};
  j["p"] = a.p;
  j["alpha"] = a.alpha;
  j["significant"] = a.significant();
  return j;
}

}  // namespace

void write_text_report(std::ostream& os, const AnalysisReport& report) {
  for (const auto& c : report.conditions) {
    os << "Condition: " << condition_label(c.condition) << " (" << c.records << " trials, " << c.participants
       << (c.participants == 1 ? " participant)\n" : " participants)\n");
    os << "Confusion matrix, rows = presented, columns = answered\n";
    os << "counts       A      B      C      D\n";
    for (MelodyId p : kAllMelodies) {
      char buf[128];
      const auto& row = c.confusion.counts[static_cast<std::size_t>(melody_index(p))];
      std::snprintf(buf, sizeof buf, "  %c     %5d  %5d  %5d  %5d\n", melody_letter(p), row[0], row[1], row[2], row[3]);
      os << buf;
    }
    os << "proportion   A      B      C      D\n";
    for (MelodyId p : kAllMelodies) {
      const auto& row = c.confusion.proportions[static_cast<std::size_t>(melody_index(p))];
      char buf[128];
      std::snprintf(buf, sizeof buf, "  %c     %5s  %5s  %5s  %5s\n", melody_letter(p), format_fixed(row[0], 2).c_str(),
                    format_fixed(row[1], 2).c_str(), format_fixed(row[2], 2).c_str(), format_fixed(row[3], 2).c_str());
      os << buf;
    }
    os << "Overall accuracy: " << c.confusion.correct() << "/" << c.records << " = " << format_fixed(c.accuracy, 3)
       << " (" << format_fixed(c.accuracy * 100.0, 0) << "%)\n";
    if (c.anova_between) {
      os << "ANOVA one-way between-groups (melodies, per-subject scores): " << anova_line(*c.anova_between) << '\n';
      if (c.anova_within)
        os << "ANOVA one-way repeated-measures (melodies within subjects): " << anova_line(*c.anova_within) << '\n';
    } else {
      os << "ANOVA: " << c.anova_note << '\n';
    }
    os << '\n';
  }
  if (report.two_factor) {
    const auto& t = *report.two_factor;
    os << "Two-factor ANOVA (" << t.df_convention << ")\n";
    os << "  melody:             " << anova_line(t.factor_a) << '\n';
    os << "  condition:          " << anova_line(t.factor_b) << '\n';
    os << "  melody x condition: " << anova_line(t.interaction) << '\n';
    if (report.two_factor_between) {
      const auto& b = *report.two_factor_between;
      os << "Two-factor ANOVA, between-subjects (" << b.df_convention << ")\n";
      os << "  melody:             " << anova_line(b.factor_a) << '\n';
      os << "  condition:          " << anova_line(b.factor_b) << '\n';
      os << "  melody x condition: " << anova_line(b.interaction) << '\n';
    }
  } else {
    os << "Two-factor ANOVA: " << report.two_factor_note << '\n';
  }
}

std::string json_report(const AnalysisReport& report) {
  nlohmann::json root;
  root["conditions"] = nlohmann::json::array();
  for (const auto& c : report.conditions) {
    nlohmann::json j;
    j["condition"] = std::string(condition_label(c.condition));
    j["trials"] = c.records;
    j["participants"] = c.participants;
    j["labels"] = {"A", "B", "C", "D"};
    j["counts"] = c.confusion.counts;
    nlohmann::json props = nlohmann::json::array();
    for (const auto& row : c.confusion.proportions) {
      nlohmann::json r = nlohmann::json::array();
      for (double v : row) r.push_back(round_half_away(v, 2));
      props.push_back(r);
    }
    j["proportions"] = props;
    j["accuracy"] = {{"correct", c.confusion.correct()},
                     {"total", c.records},
                     {"fraction", c.accuracy},
                     {"percent", round_half_away(c.accuracy * 100.0, 0)}};
    nlohmann::json anova;
    if (c.anova_between) {
      anova["between_groups"] = anova_json(*c.anova_between);
      if (c.anova_within) anova["repeated_measures"] = anova_json(*c.anova_within);
    } else {
      anova["note"] = c.anova_note;
    }
    j["anova"] = anova;
    root["conditions"].push_back(j);
  }
  if (report.two_factor) {
    const auto& t = *report.two_factor;
    root["two_factor"] = {{"convention", t.df_convention},
                          {"melody", anova_json(t.factor_a)},
                          {"condition", anova_json(t.factor_b)},
                          {"interaction", anova_json(t.interaction)}};
    if (report.two_factor_between) {
      const auto& b = *report.two_factor_between;
      root["two_factor_between"] = {{"convention", b.df_convention},
                                    {"melody", anova_json(b.factor_a)},
                                    {"condition", anova_json(b.factor_b)},
                                    {"interaction", anova_json(b.interaction)}};
    }
  } else {
    root["two_factor"] = {{"note", report.two_factor_note}};
  }
  return root.dump(2);
}

}  // namespace musinger::experiment
