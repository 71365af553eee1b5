#include "omniloc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "omniloc/error.hpp"

namespace omniloc {

using nlohmann::ordered_json;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// JSON has no NaN; missing medians become null.
ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

}  // namespace

PoseRow summarize_pose_errors(const std::string& query_type, const std::vector<PoseError>& errors,
                              int count) {
  if (count < static_cast<int>(errors.size())) {
    throw Error(ErrorCode::kInvalidArgument, "more pose errors than queries");
  }
  PoseRow row;
  row.query_type = query_type;
  row.count = count;
  row.localized = static_cast<int>(errors.size());
  int high = 0, medium = 0, low = 0;
  std::vector<double> t, r;
  for (const auto& e : errors) {
    const AccuracyBuckets b = bucketize(e);
    high += b.high;
    medium += b.medium;
    low += b.low;
    t.push_back(e.translation_m);
    r.push_back(e.rotation_deg);
  }
  const double scale = count > 0 ? 100.0 / count : 0.0;
  row.high_pct = high * scale;
  row.medium_pct = medium * scale;
  row.low_pct = low * scale;
  row.median_translation_m = median(t);
  row.median_rotation_deg = median(r);
  return row;
}

std::string format_decimal(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  // Avoid "-0.000000".
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string ir_csv(const std::vector<IrRow>& rows) {
  std::ostringstream out;
  out << "query_type,mode,k,recall,precision\n";
  for (const auto& r : rows) {
    out << r.query_type << ',' << r.mode << ',' << r.k << ',' << format_decimal(r.recall) << ','
        << format_decimal(r.precision) << '\n';
  }
  return out.str();
}

std::string ir_json(const std::vector<IrRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"query_type", r.query_type},
                   {"mode", r.mode},
                   {"k", r.k},
                   {"recall", r.recall},
                   {"precision", r.precision}});
  }
  return ordered_json{{"retrieval", arr}}.dump(2) + "\n";
}

std::string pose_csv(const std::vector<PoseRow>& rows) {
  std::ostringstream out;
  out << "query_type,count,localized,high_pct,medium_pct,low_pct,median_translation_m,"
         "median_rotation_deg\n";
  for (const auto& r : rows) {
    out << r.query_type << ',' << r.count << ',' << r.localized << ','
        << format_decimal(r.high_pct, 2) << ',' << format_decimal(r.medium_pct, 2) << ','
        << format_decimal(r.low_pct, 2) << ',' << format_decimal(r.median_translation_m) << ','
        << format_decimal(r.median_rotation_deg) << '\n';
  }
  return out.str();
}

std::string pose_json(const std::vector<PoseRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"query_type", r.query_type},
                   {"count", r.count},
                   {"localized", r.localized},
                   {"high_pct", r.high_pct},
                   {"medium_pct", r.medium_pct},
                   {"low_pct", r.low_pct},
                   {"median_translation_m", number_or_null(r.median_translation_m)},
                   {"median_rotation_deg", number_or_null(r.median_rotation_deg)}});
  }
  ordered_json doc;
  doc["thresholds"] = {
      {"high", {kHighAccuracy.translation_m, kHighAccuracy.rotation_deg}},
      {"medium", {kMediumAccuracy.translation_m, kMediumAccuracy.rotation_deg}},
      {"low", {kLowAccuracy.translation_m, kLowAccuracy.rotation_deg}},
  };
  doc["localization"] = arr;
  return doc.dump(2) + "\n";
}

std::string retrieval_csv(const std::vector<RetrievalResult>& results, const std::string& mode) {
  std::ostringstream out;
  out << "query,mode,rank,ref,score\n";
  for (const auto& r : results) {
    for (size_t i = 0; i < r.ranked.size(); ++i) {
      out << r.query_id << ',' << mode << ',' << i + 1 << ',' << r.ranked[i].ref_id << ','
          << format_decimal(r.ranked[i].score, 9) << '\n';
    }
  }
  return out.str();
}

std::string retrieval_json(const std::vector<RetrievalResult>& results, const std::string& mode) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : results) {
    ordered_json ranked = ordered_json::array();
    for (const auto& s : r.ranked) ranked.push_back({{"ref", s.ref_id}, {"score", s.score}});
    arr.push_back({{"query", r.query_id}, {"k", r.k_max}, {"ranked", ranked}});
  }
  return ordered_json{{"mode", mode}, {"results", arr}}.dump(2) + "\n";
}

RankedFile parse_retrieval_csv(const std::string& text, const std::string& origin) {
  RankedFile file;
  std::map<std::string, RetrievalResult> by_query;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "query,mode,rank,ref,score") {
        throw Error(ErrorCode::kParse, origin + ":1: unexpected header '" + line + "'");
      }
      continue;
    }
    std::vector<std::string> f;
    std::istringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) f.push_back(c);
    const std::string where = origin + ":" + std::to_string(line_no);
    if (f.size() != 5) throw Error(ErrorCode::kParse, where + ": expected 5 columns");
    if (file.mode.empty()) file.mode = f[1];
    if (f[1] != file.mode) throw Error(ErrorCode::kParse, where + ": mixed modes in one file");
    int rank = 0;
    double score = 0.0;
    try {
      size_t used = 0;
      rank = std::stoi(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument(f[2]);
      score = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument(f[4]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, where + ": bad rank or score");
    }
    RetrievalResult& r = by_query[f[0]];
    r.query_id = f[0];
    if (rank != static_cast<int>(r.ranked.size()) + 1) {
      throw Error(ErrorCode::kParse, where + ": ranks must be consecutive per query");
    }
    r.ranked.push_back({f[3], score});
    r.k_max = rank;
  }
  for (auto& [id, r] : by_query) file.results.push_back(std::move(r));
  return file;
}

}  // namespace omniloc
