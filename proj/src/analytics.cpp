#include "engage/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "engage/text.hpp"

namespace engage {

double quantile_type7(std::vector<double> data, double p) {
  if (data.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(data.begin(), data.end());
  double h = (static_cast<double>(data.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, data.size() - 1);
  return data[lo] + (h - std::floor(h)) * (data[hi] - data[lo]);
}

QuartileSummary quartile_summary(std::vector<double> data) {
  QuartileSummary s;
  if (data.empty()) return s;
  s.n = data.size();
  s.q1 = quantile_type7(data, 0.25);
  s.q2 = quantile_type7(data, 0.50);
  s.q3 = quantile_type7(data, 0.75);
  auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  s.min = *mn;
  s.max = *mx;
  return s;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// midranks of the pooled sample; returns rank sum of the first n entries
double rank_sum_first(const std::vector<double>& a, const std::vector<double>& b,
                      double* tie_term, bool* has_ties) {
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(a.size() + b.size());
  for (double x : a) pooled.emplace_back(x, 0);
  for (double x : b) pooled.emplace_back(x, 1);
  std::sort(pooled.begin(), pooled.end());
  *tie_term = 0.0;
  *has_ties = false;
  double ra = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    double t = static_cast<double>(j - i);
    if (t > 1) {
      *has_ties = true;
      *tie_term += t * t * t - t;
    }
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 0) ra += midrank;
    }
    i = j;
  }
  return ra;
}

// f[s] = number of n-subsets of ranks {1..N} with rank sum s
std::vector<double> exact_rank_sum_counts(std::size_t n, std::size_t N) {
  std::size_t max_sum = n * N;
  std::vector<std::vector<double>> f(n + 1, std::vector<double>(max_sum + 1, 0.0));
  f[0][0] = 1.0;
  for (std::size_t item = 1; item <= N; ++item) {
    for (std::size_t k = std::min(item, n); k >= 1; --k) {
      for (std::size_t s = max_sum; s >= item; --s) {
        if (f[k - 1][s - item] > 0) f[k][s] += f[k - 1][s - item];
      }
    }
  }
  return f[n];
}

}  // namespace

StatTestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  double tie_term = 0.0;
  bool has_ties = false;
  double ra = rank_sum_first(a, b, &tie_term, &has_ties);
  StatTestResult res;
  res.u = ra - n * (n + 1.0) / 2.0;

  if (!has_ties && a.size() * b.size() <= 10000) {
    res.method = MwMethod::ExactEnumeration;
    auto counts = exact_rank_sum_counts(a.size(), a.size() + b.size());
    double total = 0.0, le = 0.0, ge = 0.0;
    std::size_t base = a.size() * (a.size() + 1) / 2;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (counts[s] == 0.0) continue;
      total += counts[s];
      double u = static_cast<double>(s) - static_cast<double>(base);
      if (u <= res.u + 1e-12) le += counts[s];
      if (u >= res.u - 1e-12) ge += counts[s];
    }
    res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / total);
    return res;
  }

  res.method = MwMethod::NormalApproxTieCorrected;
  double N = n + m;
  double mu = n * m / 2.0;
  double var = n * m / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  double diff = res.u - mu;
  double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);  // continuity toward the mean
  double z = (diff + cc) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
  return res;
}

UserActivity user_activity(const Corpus& corpus) {
  UserActivity ua;
  std::map<std::pair<std::string, std::string>, std::size_t> per_user_video;
  for (const auto& c : corpus.comments) {
    ++ua.comments_per_user[c.author_id];
    ++per_user_video[{c.author_id, c.video_id}];
  }
  std::vector<double> counts;
  counts.reserve(ua.comments_per_user.size());
  for (const auto& [u, n] : ua.comments_per_user) counts.push_back(static_cast<double>(n));
  if (!counts.empty()) ua.quartiles = quartile_summary(counts);
  for (const auto& [uv, n] : per_user_video) {
    if (n > ua.max_same_video_repeat) {
      ua.max_same_video_repeat = n;
      ua.max_repeat_user = uv.first;
      ua.max_repeat_video = uv.second;
    }
  }
  return ua;
}

EcdfCurve EcdfCurve::from_samples(std::vector<double> samples) {
  EcdfCurve c;
  if (samples.empty()) return c;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    c.support.push_back(samples[i]);
    c.values.push_back(static_cast<double>(j) / n);
    i = j;
  }
  return c;
}

double EcdfCurve::at(double x) const {
  auto it = std::upper_bound(support.begin(), support.end(), x);
  if (it == support.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - support.begin()) - 1];
}

CrossVideoEngagement cross_video_engagement(const Corpus& corpus) {
  std::map<std::string, std::set<std::string>> user_videos;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> user_channel_videos;
  for (const auto& c : corpus.comments) {
    user_videos[c.author_id].insert(c.video_id);
    const Video* v = corpus.find_video(c.video_id);
    if (v) user_channel_videos[{c.author_id, v->channel_id}].insert(c.video_id);
  }
  std::vector<double> overall, per_channel;
  for (const auto& [u, vids] : user_videos) overall.push_back(static_cast<double>(vids.size()));
  for (const auto& [uc, vids] : user_channel_videos)
    per_channel.push_back(static_cast<double>(vids.size()));
  CrossVideoEngagement out;
  out.videos_per_user = EcdfCurve::from_samples(std::move(overall));
  out.videos_per_user_per_channel = EcdfCurve::from_samples(std::move(per_channel));
  return out;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // continued fraction (Lentz), with the symmetry transform for convergence
  auto betacf = [](double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
      double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::fabs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::fabs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::fabs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::fabs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      double del = d * c;
      h *= del;
      if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
  };
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  double df = static_cast<double>(n - 2);
  double r2 = std::min(r * r, 1.0 - 1e-15);
  double t2 = r * r * df / (1.0 - r2);
  return incomplete_beta(df / 2.0, 0.5, df / (df + t2));
}

CorrelationMatrix correlation_matrix(const std::vector<Video>& videos, const Corpus& corpus) {
  if (videos.size() < 3)
    throw std::invalid_argument("correlation_matrix needs >= 3 videos");
  CorrelationMatrix cm;
  cm.n = videos.size();
  std::array<std::vector<double>, 3> cols;
  for (const auto& v : videos) {
    auto it = corpus.comments_by_video.find(v.video_id);
    double comments = it == corpus.comments_by_video.end()
                          ? 0.0
                          : static_cast<double>(it->second.size());
    cols[0].push_back(static_cast<double>(v.view_count));
    cols[1].push_back(comments);
    cols[2].push_back(static_cast<double>(v.like_count));
  }
  std::array<bool, 3> constant{};
  std::array<double, 3> mean{};
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (double x : cols[i]) s += x;
    mean[i] = s / static_cast<double>(cols[i].size());
    constant[i] = std::all_of(cols[i].begin(), cols[i].end(),
                              [&](double x) { return x == cols[i][0]; });
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) {
        cm.r[i][j] = 1.0;
        cm.p_value[i][j] = 0.0;
        continue;
      }
      if (constant[i] || constant[j]) {
        cm.r[i][j] = nan;
        cm.p_value[i][j] = nan;
        continue;
      }
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t k = 0; k < cols[i].size(); ++k) {
        double dx = cols[i][k] - mean[i], dy = cols[j][k] - mean[j];
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
      }
      cm.r[i][j] = sxy / std::sqrt(sxx * syy);
      cm.p_value[i][j] = pearson_p_value(cm.r[i][j], cm.n);
    }
  }
  return cm;
}

EngagementEcdf engagement_ecdf(const Corpus& corpus) {
  EngagementEcdf out;
  std::vector<double> deltas;
  for (const auto& c : corpus.comments) {
    const Video* v = corpus.find_video(c.video_id);
    if (!v) continue;
    double days = static_cast<double>(c.published_at - v->published_at) / 86400.0;
    if (days < 0) {
      ++out.negative_deltas;
      continue;
    }
    deltas.push_back(days);
  }
  out.ecdf = EcdfCurve::from_samples(std::move(deltas));
  return out;
}

namespace {

// days since 1970-01-01 -> (y, m, d); Howard Hinnant's civil_from_days
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  unsigned doe = static_cast<unsigned>(z - era * 146097);
  unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yy + (m <= 2));
}

std::string day_label(std::int64_t epoch_day) {
  int y;
  unsigned m, d;
  civil_from_days(epoch_day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::int64_t month_index(std::int64_t epoch_seconds) {
  int y;
  unsigned m, d;
  civil_from_days(epoch_seconds >= 0 ? epoch_seconds / 86400
                                     : (epoch_seconds - 86399) / 86400,
                  y, m, d);
  return static_cast<std::int64_t>(y) * 12 + (m - 1);
}

std::string month_label(std::int64_t mi) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04lld-%02lld", static_cast<long long>(mi / 12),
                static_cast<long long>(mi % 12 + 1));
  return buf;
}

}  // namespace

EngagementSeries normalized_timeseries(const Corpus& corpus, TimeBucket bucket,
                                       double spike_factor, std::size_t spike_window) {
  if (corpus.videos.empty())
    throw std::invalid_argument("normalized_timeseries needs >= 1 video");
  EngagementSeries s;
  s.bucket = bucket;
  s.video_count = corpus.videos.size();

  auto index_of = [&](std::int64_t epoch_seconds) -> std::int64_t {
    std::int64_t day = epoch_seconds >= 0 ? epoch_seconds / 86400
                                          : (epoch_seconds - 86399) / 86400;
    switch (bucket) {
      case TimeBucket::Day: return day;
      case TimeBucket::Week: return day >= 0 ? day / 7 : (day - 6) / 7;
      case TimeBucket::Month: return month_index(epoch_seconds);
    }
    return day;
  };
  auto label_of = [&](std::int64_t idx) {
    switch (bucket) {
      case TimeBucket::Day: return day_label(idx);
      case TimeBucket::Week: return day_label(idx * 7);
      case TimeBucket::Month: return month_label(idx);
    }
    return day_label(idx);
  };

  std::map<std::int64_t, std::int64_t> counts;
  for (const auto& c : corpus.comments) ++counts[index_of(c.published_at)];
  if (counts.empty()) return s;
  std::int64_t lo = counts.begin()->first, hi = counts.rbegin()->first;
  for (std::int64_t i = lo; i <= hi; ++i) {
    auto it = counts.find(i);
    std::int64_t n = it == counts.end() ? 0 : it->second;
    s.labels.push_back(label_of(i));
    s.counts.push_back(n);
    s.normalized.push_back(static_cast<double>(n) / static_cast<double>(s.video_count));
  }

  // centered rolling median, window truncated at the edges
  std::size_t half = spike_window / 2;
  for (std::size_t i = 0; i < s.normalized.size(); ++i) {
    std::size_t b = i >= half ? i - half : 0;
    std::size_t e = std::min(i + half + 1, s.normalized.size());
    std::vector<double> win(s.normalized.begin() + static_cast<std::ptrdiff_t>(b),
                            s.normalized.begin() + static_cast<std::ptrdiff_t>(e));
    std::sort(win.begin(), win.end());
    double med = win.size() % 2 == 1
                     ? win[win.size() / 2]
                     : 0.5 * (win[win.size() / 2 - 1] + win[win.size() / 2]);
    if (s.normalized[i] > med * spike_factor) s.spikes.push_back(i);
  }
  return s;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report file: " + p.string());
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

ReportBundle write_report_bundle(const Corpus& corpus, const std::filesystem::path& out_dir,
                                 TimeBucket bucket, double spike_factor) {
  std::filesystem::create_directories(out_dir);

  std::map<Category, Corpus> per_cat;
  for (const auto& v : corpus.videos) per_cat[v.category].videos.push_back(v);
  for (auto& [cat, sub] : per_cat) {
    sub.channels = corpus.channels;
    for (const auto& c : corpus.comments) {
      const Video* v = corpus.find_video(c.video_id);
      if (v && v->category == cat) sub.comments.push_back(c);
    }
    sub.rebuild_index();
  }

  auto quart = open_csv(out_dir / "quartiles.csv");
  quart << "dataset,n_users,min,q1,q2,q3,max,max_same_video_repeat\n";
  auto corr = open_csv(out_dir / "correlation.csv");
  corr << "dataset,metric_a,metric_b,r,p_value,n\n";
  auto ecdf = open_csv(out_dir / "ecdf.csv");
  ecdf << "dataset,days,cumulative_share\n";
  auto series = open_csv(out_dir / "timeseries.csv");
  series << "dataset,bucket,count,normalized\n";
  auto spikes = open_csv(out_dir / "spikes.csv");
  spikes << "dataset,bucket,normalized\n";

  for (const auto& [cat, sub] : per_cat) {
    const std::string name = category_name(cat);
    auto ua = user_activity(sub);
    quart << name << ',' << ua.quartiles.n << ',' << fmt(ua.quartiles.min) << ','
          << fmt(ua.quartiles.q1) << ',' << fmt(ua.quartiles.q2) << ',' << fmt(ua.quartiles.q3)
          << ',' << fmt(ua.quartiles.max) << ',' << ua.max_same_video_repeat << '\n';

    if (sub.videos.size() >= 3) {
      auto cm = correlation_matrix(sub.videos, sub);
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
          corr << name << ',' << CorrelationMatrix::kMetrics[i] << ','
               << CorrelationMatrix::kMetrics[j] << ',' << fmt(cm.r[i][j]) << ','
               << fmt(cm.p_value[i][j]) << ',' << cm.n << '\n';
        }
      }
    }

    auto ee = engagement_ecdf(sub);
    for (std::size_t i = 0; i < ee.ecdf.support.size(); ++i)
      ecdf << name << ',' << fmt(ee.ecdf.support[i]) << ',' << fmt(ee.ecdf.values[i]) << '\n';

    if (!sub.videos.empty()) {
      auto ts = normalized_timeseries(sub, bucket, spike_factor);
      for (std::size_t i = 0; i < ts.labels.size(); ++i) {
        series << name << ',' << ts.labels[i] << ',' << ts.counts[i] << ','
               << fmt(ts.normalized[i]) << '\n';
      }
      for (std::size_t idx : ts.spikes)
        spikes << name << ',' << ts.labels[idx] << ',' << fmt(ts.normalized[idx]) << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["corpus_fingerprint"] = corpus_fingerprint(corpus);
  manifest["bucket"] = bucket == TimeBucket::Day ? "day"
                       : bucket == TimeBucket::Week ? "week" : "month";
  manifest["spike_factor"] = spike_factor;
  manifest["files"] = {"quartiles.csv", "correlation.csv", "ecdf.csv", "timeseries.csv",
                       "spikes.csv"};
  std::ofstream mout(out_dir / "manifest.json", std::ios::trunc);
  mout << manifest.dump(2) << '\n';

  return ReportBundle{out_dir};
}

}  // namespace engage
