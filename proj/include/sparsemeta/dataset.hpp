#pragma once

// Study records, CSV ingestion and empirical effect sizes.
//
// Field usage per design:
//   OneGroupBinary   y1 = events, n1 = subjects
//   TwoGroupBinary   y0/n0 control arm, y1/n1 treatment arm
//   OneGroupCount    y1 = events, n1 = person-time
//   TwoGroupCount    y0/n0 and y1/n1 with n = person-time
//   EffectSE         theta_hat, se
// Counts are stored as integers; sizes are doubles so that exposures fit.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sparsemeta {

enum class Design { OneGroupBinary, TwoGroupBinary, OneGroupCount, TwoGroupCount, EffectSE };

enum class ZeroCellPolicy { AddHalf, Reject };

std::string_view to_string(Design d);
/// Accepts the CLI spellings ("two-group-binary", ...). Throws InputError.
Design parse_design(std::string_view name);

struct StudyRecord {
  std::string study_id;
  Design design = Design::TwoGroupBinary;
  int y0 = 0;
  int y1 = 0;
  double n0 = 0.0;
  double n1 = 0.0;
  double theta_hat = 0.0;
  double se = 0.0;

  static StudyRecord one_group_binary(std::string id, int y, int n);
  static StudyRecord two_group_binary(std::string id, int y0, int n0, int y1, int n1);
  static StudyRecord one_group_count(std::string id, int y, double exposure);
  static StudyRecord two_group_count(std::string id, int y0, double t0, int y1, double t1);
  static StudyRecord effect_se(std::string id, double theta_hat, double se);

  /// Throws InputError when the record breaks its design's invariants.
  void validate() const;
  bool two_group() const {
    return design == Design::TwoGroupBinary || design == Design::TwoGroupCount;
  }
  int total_events() const { return y0 + y1; }
};

struct Dataset {
  Design design = Design::TwoGroupBinary;
  std::vector<StudyRecord> studies;
  std::string source;

  std::size_t size() const { return studies.size(); }
};

struct EffectSummary {
  double theta_hat = 0.0;
  double se = 0.0;
  double t = 0.0;
  bool corrected = false;
};

/// Parses CSV text with the header for `design`. Row order is preserved.
/// Throws InputError naming the offending line.
Dataset parse_dataset(std::string_view text, Design design, std::string source = {});
Dataset read_dataset_file(const std::string& path, Design design);

/// Empirical log-scale effect, its standard error and t = effect / se.
/// Under AddHalf a zero in any cell entering a log or denominator adds 0.5
/// to every cell of that study.
EffectSummary empirical_effect(const StudyRecord& study,
                               ZeroCellPolicy policy = ZeroCellPolicy::AddHalf);

/// t-statistics for hypothetical outcomes, same zero-cell policy as above.
double t_one_group_binary(int y, double n);
double t_two_group_binary(int y0, double n0, int y1, double n1);
double t_one_group_count(int y, double exposure);
double t_two_group_count(int y0, double t0, int y1, double t1);

struct FunnelPoint {
  std::string study_id;
  double effect = 0.0;
  double se = 0.0;
};

std::vector<FunnelPoint> funnel_points(const Dataset& ds,
                                       ZeroCellPolicy policy = ZeroCellPolicy::AddHalf);

/// Same study with the arms exchanged (two-group designs only).
StudyRecord swap_groups(const StudyRecord& study);
Dataset swap_groups(const Dataset& ds);

}  // namespace sparsemeta
