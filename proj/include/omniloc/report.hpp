#pragma once

#include <map>
#include <string>
#include <vector>

#include "omniloc/pose_estimation.hpp"
#include "omniloc/retrieval.hpp"

namespace omniloc {

struct IrRow {
  std::string query_type;
  std::string mode;
  int k = 0;
  double recall = 0.0;
  double precision = 0.0;
};

/// One row per query type: percentages of all queries in each accuracy
/// bucket, plus medians over the localized ones.
struct PoseRow {
  std::string query_type;
  int count = 0;
  int localized = 0;
  double high_pct = 0.0;
  double medium_pct = 0.0;
  double low_pct = 0.0;
  double median_translation_m = 0.0;  // NaN when nothing was localized
  double median_rotation_deg = 0.0;
};

/// `errors` holds one entry per localized query; `count` includes the failures.
PoseRow summarize_pose_errors(const std::string& query_type, const std::vector<PoseError>& errors,
                              int count);

/// Fixed-precision decimal used by every CSV writer ("nan" for NaN).
std::string format_decimal(double v, int digits = 6);

std::string ir_csv(const std::vector<IrRow>& rows);
std::string ir_json(const std::vector<IrRow>& rows);
std::string pose_csv(const std::vector<PoseRow>& rows);
std::string pose_json(const std::vector<PoseRow>& rows);

/// Ranked lists: `query,mode,rank,ref,score`.
std::string retrieval_csv(const std::vector<RetrievalResult>& results, const std::string& mode);
std::string retrieval_json(const std::vector<RetrievalResult>& results, const std::string& mode);

struct RankedFile {
  std::string mode;
  std::vector<RetrievalResult> results;  // sorted by query id
};
RankedFile parse_retrieval_csv(const std::string& text, const std::string& origin = "<ranked>");

}  // namespace omniloc
