#include "engage/service.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "engage/pipeline.hpp"
#include "engage/topics.hpp"

namespace engage {

using nlohmann::json;

struct QueryService::Cache {
  std::mutex mu;
  std::map<std::string, Corpus> kept;  // run_id -> kept corpus

  const Corpus& kept_corpus(const PipelineRun& run) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = kept.find(run.run_id);
    if (it == kept.end()) {
      it = kept.emplace(run.run_id, load_corpus(run.dir / "kept.jsonl", Category::Baseline))
               .first;
    }
    return it->second;
  }
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& run_id = {}) {
  json j{{"error", message}};
  if (!run_id.empty()) j["run_id"] = run_id;
  send_json(res, status, j);
}

// CSV lines of the bundle file whose first field equals `dataset` (all lines
// when dataset is empty), header included, verbatim.
std::optional<std::string> filter_csv(const std::filesystem::path& file,
                                      const std::string& dataset) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string out, line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      out += line;
      out += '\n';
      first = false;
      continue;
    }
    if (dataset.empty() || line.compare(0, dataset.size() + 1, dataset + ",") == 0) {
      out += line;
      out += '\n';
    }
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  return fields;
}

}  // namespace

QueryService::QueryService(std::filesystem::path runs_root)
    : runs_root_(std::move(runs_root)),
      server_(std::make_unique<httplib::Server>()),
      cache_(std::make_shared<Cache>()) {
  register_routes();
}

QueryService::~QueryService() { stop(); }

bool QueryService::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int QueryService::bind_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool QueryService::listen_after_bind() { return server_->listen_after_bind(); }

void QueryService::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

httplib::Server& QueryService::server() { return *server_; }

void QueryService::register_routes() {
  auto runs_root = runs_root_;
  auto cache = cache_;

  auto resolve_run = [runs_root](const std::string& id) -> std::optional<PipelineRun> {
    auto runs = list_runs(runs_root);
    if (runs.empty()) return std::nullopt;
    if (id != "latest") {
      for (auto& r : runs) {
        if (r.run_id == id) return r;
      }
      return std::nullopt;
    }
    // latest = newest last-stage timestamp, ties by run_id
    std::optional<PipelineRun> best;
    std::pair<std::int64_t, std::string> best_key{-1, ""};
    for (auto& r : runs) {
      std::int64_t last = 0;
      std::ifstream in(r.dir / "manifest.json");
      json j;
      in >> j;
      for (const auto& s : j.at("stages")) {
        last = std::max(last, s.value("completed_at", std::int64_t{0}));
      }
      std::pair<std::int64_t, std::string> key{last, r.run_id};
      if (key > best_key) {
        best_key = key;
        best = r;
      }
    }
    return best;
  };

  server_->Get("/healthz", [runs_root](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}, {"runs", list_runs(runs_root).size()}});
  });

  server_->Get("/runs", [runs_root](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& r : list_runs(runs_root)) {
      out.push_back({{"run_id", r.run_id},
                     {"status", r.sealed ? "sealed" : "partial"},
                     {"stages", r.completed_stages}});
    }
    send_json(res, 200, json{{"runs", out}});
  });

  server_->Get(R"(/runs/([^/]+)/summary)",
               [resolve_run](const httplib::Request& req, httplib::Response& res) {
                 auto run = resolve_run(req.matches[1]);
                 if (!run) return send_error(res, 404, "unknown run");
                 std::ifstream in(run->dir / "manifest.json");
                 json manifest;
                 in >> manifest;
                 send_json(res, 200, manifest);
               });

  server_->Get(
      R"(/runs/([^/]+)/videos/([^/]+)/engagement)",
      [resolve_run, cache](const httplib::Request& req, httplib::Response& res) {
        auto run = resolve_run(req.matches[1]);
        if (!run) return send_error(res, 404, "unknown run");
        if (!run->stage_done("analytics"))
          return send_error(res, 409, "analytics stage not completed", run->run_id);
        const Corpus& kept = cache->kept_corpus(*run);
        const Video* video = kept.find_video(req.matches[2]);
        if (!video) return send_error(res, 404, "unknown video", run->run_id);
        auto cit = kept.comments_by_video.find(video->video_id);
        json j;
        j["run_id"] = run->run_id;
        j["video_id"] = video->video_id;
        j["category"] = category_name(video->category);
        j["view_count"] = video->view_count;
        j["like_count"] = video->like_count;
        j["reported_comment_count"] = video->reported_comment_count;
        j["available_comments"] = cit == kept.comments_by_video.end() ? 0 : cit->second.size();
        // per-user quartile context, straight from the report bundle
        std::ifstream q(run->dir / "analytics" / "quartiles.csv");
        std::string line;
        std::getline(q, line);  // header
        auto header = split_csv_line(line);
        while (std::getline(q, line)) {
          auto fields = split_csv_line(line);
          if (!fields.empty() && fields[0] == category_name(video->category)) {
            json quart;
            for (std::size_t i = 1; i < fields.size() && i < header.size(); ++i) {
              quart[header[i]] = std::strtod(fields[i].c_str(), nullptr);
            }
            j["user_comment_quartiles"] = quart;
            j["quartiles_csv_row"] = line;
            break;
          }
        }
        send_json(res, 200, j);
      });

  server_->Get(R"(/runs/([^/]+)/topics)",
               [resolve_run](const httplib::Request& req, httplib::Response& res) {
                 auto run = resolve_run(req.matches[1]);
                 if (!run) return send_error(res, 404, "unknown run");
                 if (!run->stage_done("topics"))
                   return send_error(res, 409, "topics stage not completed", run->run_id);
                 double min_coherence = 0.0;
                 if (req.has_param("min_coherence"))
                   min_coherence = std::strtod(req.get_param_value("min_coherence").c_str(),
                                               nullptr);
                 TopicModelReport report = load_topic_report(run->dir / "topics.json");
                 json topics = json::array();
                 for (const auto& c : filter_coherent(report, min_coherence)) {
                   json kw = json::array();
                   for (const auto& [phrase, score] : c.keywords)
                     kw.push_back({{"phrase", phrase}, {"score", score}});
                   topics.push_back({{"topic_id", c.topic_id},
                                     {"size", c.size},
                                     {"comment_count", c.comment_count},
                                     {"coherence", c.coherence},
                                     {"keywords", kw}});
                 }
                 json j{{"run_id", run->run_id},
                        {"min_coherence", min_coherence},
                        {"noise_fraction", report.noise_fraction},
                        {"topics", topics}};
                 if (report.silhouette) j["silhouette"] = *report.silhouette;
                 if (report.davies_bouldin) j["davies_bouldin"] = *report.davies_bouldin;
                 send_json(res, 200, j);
               });

  server_->Get(R"(/runs/([^/]+)/stance/summary)",
               [resolve_run](const httplib::Request& req, httplib::Response& res) {
                 auto run = resolve_run(req.matches[1]);
                 if (!run) return send_error(res, 404, "unknown run");
                 if (!run->stage_done("stance"))
                   return send_error(res, 409, "stance stage not completed", run->run_id);
                 std::ifstream in(run->dir / "stance_summary.json");
                 json summary;
                 in >> summary;
                 json rows = json::array();
                 std::string dataset =
                     req.has_param("dataset") ? req.get_param_value("dataset") : "";
                 if (!dataset.empty() && !parse_category(dataset))
                   return send_error(res, 404, "unknown dataset", run->run_id);
                 for (const auto& row : summary.at("rows")) {
                   if (dataset.empty() || row.at("category") == dataset) rows.push_back(row);
                 }
                 send_json(res, 200, json{{"run_id", run->run_id}, {"rows", rows}});
               });

  auto analytics_csv = [resolve_run](const httplib::Request& req, httplib::Response& res,
                                     const std::string& file) {
    auto run = resolve_run(req.matches[1]);
    if (!run) return send_error(res, 404, "unknown run");
    if (!run->stage_done("analytics"))
      return send_error(res, 409, "analytics stage not completed", run->run_id);
    std::string dataset = req.has_param("dataset") ? req.get_param_value("dataset") : "";
    if (!dataset.empty() && !parse_category(dataset))
      return send_error(res, 404, "unknown dataset", run->run_id);
    if (file == "timeseries.csv" && req.has_param("bucket")) {
      std::ifstream m(run->dir / "analytics" / "manifest.json");
      json manifest;
      m >> manifest;
      if (manifest.value("bucket", std::string()) != req.get_param_value("bucket"))
        return send_error(res, 400, "requested bucket not computed for this run",
                          run->run_id);
    }
    auto csv = filter_csv(run->dir / "analytics" / file, dataset);
    if (!csv) return send_error(res, 404, "report file missing", run->run_id);
    send_json(res, 200,
              json{{"run_id", run->run_id}, {"dataset", dataset}, {"csv", *csv}});
  };
  server_->Get(R"(/runs/([^/]+)/analytics/ecdf)",
               [analytics_csv](const httplib::Request& req, httplib::Response& res) {
                 analytics_csv(req, res, "ecdf.csv");
               });
  server_->Get(R"(/runs/([^/]+)/analytics/correlation)",
               [analytics_csv](const httplib::Request& req, httplib::Response& res) {
                 analytics_csv(req, res, "correlation.csv");
               });
  server_->Get(R"(/runs/([^/]+)/analytics/timeseries)",
               [analytics_csv](const httplib::Request& req, httplib::Response& res) {
                 analytics_csv(req, res, "timeseries.csv");
               });
  server_->Get(R"(/runs/([^/]+)/analytics/quartiles)",
               [analytics_csv](const httplib::Request& req, httplib::Response& res) {
                 analytics_csv(req, res, "quartiles.csv");
               });
  server_->Get(R"(/runs/([^/]+)/analytics/spikes)",
               [analytics_csv](const httplib::Request& req, httplib::Response& res) {
                 analytics_csv(req, res, "spikes.csv");
               });
}

}  // namespace engage
