#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "musinger/core/types.hpp"
#include "musinger/experiment/stats.hpp"

namespace musinger::experiment {

struct TrialRecord {
  std::string participant;
  Condition condition;
  int trial_index = 0;
  MelodyId presented = MelodyId::A;
  MelodyId answered = MelodyId::A;

  bool correct() const noexcept { return presented == answered; }
  bool operator==(const TrialRecord&) const = default;
};

/// Seeded uniform permutation of {each melody x reps}.
std::vector<MelodyId> build_session_plan(std::span<const MelodyId> melodies, int reps, std::uint64_t seed);
inline std::vector<MelodyId> build_session_plan(std::uint64_t seed) {
  return build_session_plan(kAllMelodies, 3, seed);
}

/// What the answer source is shown for one trial. It never contains the
/// presented id.
struct Prompt {
  int trial_index = 0;
  RhythmPattern perceived;  // melody_id is always empty
};

/// Renders a stimulus through the pipeline and returns what the display side
/// perceived. Receives the stimulus with its melody id stripped.
using Presenter = std::function<RhythmPattern(const RhythmPattern& stimulus)>;
/// nullopt means the source timed out or gave no answer.
using AnswerSource = std::function<std::optional<MelodyId>(const Prompt& prompt)>;
using TrialLogger = std::function<void(const std::string& message)>;

struct SessionOptions {
  std::string participant = "P1";
  Condition condition;
  TrialLogger log;  // optional
};

/// One record per plan entry in presentation order. Trials the answer source
/// leaves unanswered are logged and excluded.
std::vector<TrialRecord> run_session(std::span<const MelodyId> plan, const SessionOptions& options,
                                     const Presenter& presenter, const AnswerSource& answers);

struct ConfusionMatrix {
  std::array<std::array<int, 4>, 4> counts{};
  std::array<std::array<double, 4>, 4> proportions{};

  int row_total(MelodyId presented) const noexcept;
  int total() const noexcept;
  int correct() const noexcept;
};

/// Errc::EmptyData for no records.
ConfusionMatrix confusion_matrix(std::span<const TrialRecord> records);
double overall_accuracy(std::span<const TrialRecord> records);

/// Rounds half away from zero to `digits` decimals, as printed tables do
/// (0.125 -> 0.13).
double round_half_away(double value, int digits);
std::string format_fixed(double value, int digits);

// ---- trial log CSV ----------------------------------------------------------

inline constexpr const char* kTrialLogHeader = "participant,condition,trial_index,presented,answered";

void write_trial_log(std::ostream& os, std::span<const TrialRecord> records, bool with_header = true);
/// Errc::BadFormat with the offending line number.
std::vector<TrialRecord> read_trial_log(std::istream& is);

// ---- analysis report ---------------------------------------------------------

/// Per-subject proportion correct for one melody in one condition.
using SubjectScores = std::vector<std::array<double, 4>>;

/// Scores per participant (sorted by id) for one condition.
SubjectScores subject_scores(std::span<const TrialRecord> records, Condition condition,
                             std::vector<std::string>* participants = nullptr);

struct ConditionReport {
  Condition condition;
  int records = 0;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  int participants = 0;
  std::optional<AnovaResult> anova_between;  // groups = melodies, observations = subjects
  std::optional<AnovaResult> anova_within;   // same data, subjects as repeated measures
  std::string anova_note;                    // why ANOVA is absent, if it is
};

struct AnalysisReport {
  std::vector<ConditionReport> conditions;
  std::optional<TwoFactorResult> two_factor;          // melody x condition, within subjects
  std::optional<TwoFactorResult> two_factor_between;  // same table, subjects as independent observations
  std::string two_factor_note;
};

AnalysisReport analyze(std::span<const TrialRecord> records);

void write_text_report(std::ostream& os, const AnalysisReport& report);
std::string json_report(const AnalysisReport& report);

}  // namespace musinger::experiment
