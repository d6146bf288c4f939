#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engage/corpus.hpp"

namespace engage {

// Type-7 quantile (linear interpolation of order statistics); data need not
// be sorted. p in [0,1].
double quantile_type7(std::vector<double> data, double p);

struct QuartileSummary {
  double min = 0, q1 = 0, q2 = 0, q3 = 0, max = 0;
  std::size_t n = 0;
};

QuartileSummary quartile_summary(std::vector<double> data);

enum class MwMethod { ExactEnumeration, NormalApproxTieCorrected };

struct StatTestResult {
  double u = 0.0;        // U statistic of the first sample
  double p_value = 1.0;  // two-sided
  MwMethod method = MwMethod::NormalApproxTieCorrected;
};

// Midranks for ties. Exact two-sided p by counting all C(n+m, n) rank
// assignments when n*m <= 10000 and the pooled sample is tie-free, else normal
// approximation with tie-corrected variance and continuity correction.
StatTestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

struct UserActivity {
  std::map<std::string, std::size_t> comments_per_user;
  QuartileSummary quartiles;
  std::size_t max_same_video_repeat = 0;
  std::string max_repeat_user;
  std::string max_repeat_video;
};

UserActivity user_activity(const Corpus& corpus);

struct EcdfCurve {
  std::vector<double> support;  // sorted x
  std::vector<double> values;   // F(x), non-decreasing, last == 1 when non-empty

  static EcdfCurve from_samples(std::vector<double> samples);
  double at(double x) const;  // F(x), 0 below support
};

struct CrossVideoEngagement {
  EcdfCurve videos_per_user;              // unique videos per user, corpus-wide
  EcdfCurve videos_per_user_per_channel;  // one sample per (user, channel)
};

CrossVideoEngagement cross_video_engagement(const Corpus& corpus);

struct CorrelationMatrix {
  // order: views, comments, likes
  static constexpr std::array<const char*, 3> kMetrics = {"views", "comments", "likes"};
  std::array<std::array<double, 3>, 3> r{};        // NaN marks undefined pairs
  std::array<std::array<double, 3>, 3> p_value{};  // two-sided, t-distribution, n-2 dof
  std::size_t n = 0;
};

// Pearson correlations over per-video (view_count, available comments,
// like_count). Constant columns make their pairs undefined (NaN), not 0.
CorrelationMatrix correlation_matrix(const std::vector<Video>& videos, const Corpus& corpus);

struct EngagementEcdf {
  EcdfCurve ecdf;                    // comment age in days at posting time
  std::size_t negative_deltas = 0;   // flagged, excluded from the curve
  double share_within(double days) const { return ecdf.at(days); }
};

EngagementEcdf engagement_ecdf(const Corpus& corpus);

enum class TimeBucket { Day, Week, Month };

struct EngagementSeries {
  TimeBucket bucket = TimeBucket::Month;
  std::vector<std::string> labels;     // calendar bucket labels, contiguous
  std::vector<std::int64_t> counts;    // raw comment counts
  std::vector<double> normalized;      // counts / video count
  std::size_t video_count = 0;
  std::vector<std::size_t> spikes;     // indices exceeding rolling median x factor
};

EngagementSeries normalized_timeseries(const Corpus& corpus, TimeBucket bucket,
                                       double spike_factor = 3.0,
                                       std::size_t spike_window = 9);

// Two-sided p-value for Pearson r via the t-distribution with df = n-2.
double pearson_p_value(double r, std::size_t n);

// Regularized incomplete beta I_x(a, b); exposed for the statistics oracles.
double incomplete_beta(double a, double b, double x);

struct ReportBundle {
  std::filesystem::path dir;
};

// CSV-per-figure report bundle: quartiles.csv, correlation.csv, ecdf.csv,
// timeseries.csv, spikes.csv + manifest.json. All analytics are computed per
// category.
ReportBundle write_report_bundle(const Corpus& corpus, const std::filesystem::path& out_dir,
                                 TimeBucket bucket = TimeBucket::Month,
                                 double spike_factor = 3.0);

}  // namespace engage
