#include "prefrank/service/http_server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <json.hpp>

namespace prefrank {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSessionNotFound:
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kStaleAnswer:
    case ErrorCode::kNothingToUndo:
    case ErrorCode::kStageIncomplete:
    case ErrorCode::kAlreadyPresent:
      return 409;
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownVenue:
    case ErrorCode::kUnknownField:
    case ErrorCode::kUnknownItem:
      return 400;
    default:
      return 500;
  }
}

namespace {

json venue_json(const SurveyService& service, const VenueId& id) {
  const Venue* v = service.reference().find_venue(id);
  return json{{"id", id}, {"name", v ? v->name : id}};
}

json progress_json(const Progress& p) {
  return json{{"discovery", p.discovery},
              {"comparison", p.comparison},
              {"overall", p.overall},
              {"questions_asked", p.questions_asked},
              {"comparisons", p.comparisons}};
}

json question_json(const SurveyService& service, const NextQuestion& q) {
  json payload;
  switch (q.kind) {
    case QuestionKind::kDiscovery: {
      const auto& d = *q.discovery;
      payload = venue_json(service, d.venue);
      payload["source"] = d.source == QuestionSource::kHistory       ? "history"
                          : d.source == QuestionSource::kRecommender ? "recommender"
                                                                     : "popularity";
      break;
    }
    case QuestionKind::kComparison:
      payload = json{{"first", venue_json(service, q.pair->first)},
                     {"second", venue_json(service, q.pair->second)},
                     {"stage_complete", q.stage_complete},
                     {"exhausted", q.exhausted}};
      break;
    case QuestionKind::kDone:
      payload = json{{"stage_complete", q.stage_complete}, {"exhausted", q.exhausted}, {"summary_ready", true}};
      break;
  }
  return json{{"kind", std::string(question_kind_name(q.kind))}, {"payload", payload}};
}

json rows_json(const SurveyService& service, const std::vector<ScoreRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = venue_json(service, r.venue);
    row["score"] = r.score;
    row["normalized"] = r.normalized;
    row["rank"] = r.rank;
    out.push_back(std::move(row));
  }
  return out;
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kParse, "request body must be a JSON object");
    return j;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("request body: ") + ex.what());
  }
}

std::string text(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing string field '") + key + "'");
  }
  return body[key].get<std::string>();
}

bool continue_flag(const httplib::Request& req, const json& body = json::object()) {
  if (req.has_param("continue")) {
    const auto v = req.get_param_value("continue");
    return v == "true" || v == "1";
  }
  return body.value("continue", false);
}

SessionRequest session_request(const json& body) {
  SessionRequest r;
  r.field = text(body, "field");
  if (!body.contains("aspirations")) throw Error(ErrorCode::kInvalidArgument, "missing 'aspirations'");
  const auto& a = body["aspirations"];
  try {
    if (a.is_array()) {
      if (a.size() != 3) throw Error(ErrorCode::kInvalidArgument, "aspirations must name exactly three venues");
      r.aspirations = {a[0].get<std::string>(), a[1].get<std::string>(), a[2].get<std::string>()};
    } else {
      r.aspirations = {text(a, "top"), text(a, "mid"), text(a, "low")};
    }
    if (body.contains("publications")) r.publications = body["publications"].get<std::vector<std::string>>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidArgument, ex.what());
  }
  if (body.contains("label") && body["label"].is_string()) r.label = body["label"].get<std::string>();
  return r;
}

SessionAnswer session_answer(const json& body) {
  SessionAnswer a;
  if (body.contains("venue")) {
    a.kind = QuestionKind::kDiscovery;
    a.venue = text(body, "venue");
    if (!body.contains("liked") || !body["liked"].is_boolean()) {
      throw Error(ErrorCode::kInvalidArgument, "discovery answers need a boolean 'liked'");
    }
    a.liked = body["liked"].get<bool>();
    return a;
  }
  a.kind = QuestionKind::kComparison;
  a.first = text(body, "first");
  a.second = text(body, "second");
  a.outcome = parse_outcome(text(body, "outcome"));
  return a;
}

}  // namespace

struct HttpServer::Impl {
  SurveyService& service;
  httplib::Server server;
  int port = -1;
  std::atomic<bool> stop_requested{false};
  std::atomic<bool> entered{false};
  std::atomic<bool> finished{false};

  explicit Impl(SurveyService& s) : service(s) {
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  template <typename F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send(res, http_status(e.code()), json{{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}});
      } catch (const std::exception& e) {
        send(res, 500, json{{"error", "INTERNAL"}, {"message", e.what()}});
      }
    };
  }

  void routes() {
    auto& s = service;
    server.Get("/health", guarded([](const auto&, auto& res) { send(res, 200, json{{"ok", true}}); }));
    server.Post("/sessions", guarded([&s](const auto& req, auto& res) {
                  send(res, 201, json{{"session_id", s.create_session(session_request(parse_body(req)))}});
                }));
    server.Get(R"(/sessions/([0-9a-zA-Z]+))", guarded([&s](const auto& req, auto& res) {
                 const auto info = s.info(req.matches[1]);
                 send(res, 200,
                      json{{"session_id", info.session_id},
                           {"field", info.field},
                           {"stage", std::string(stage_name(info.stage))},
                           {"liked", info.liked},
                           {"progress", progress_json(info.progress)},
                           {"answers", info.answers}});
               }));
    server.Get(R"(/sessions/([0-9a-zA-Z]+)/next)", guarded([&s](const auto& req, auto& res) {
                 send(res, 200, question_json(s, s.next_question(req.matches[1], continue_flag(req))));
               }));
    server.Post(R"(/sessions/([0-9a-zA-Z]+)/answer)", guarded([&s](const auto& req, auto& res) {
                  const json body = parse_body(req);
                  const auto result = s.submit_answer(req.matches[1], session_answer(body), continue_flag(req, body));
                  send(res, 200,
                       json{{"ok", true}, {"progress", progress_json(result.progress)},
                            {"next", question_json(s, result.next)}});
                }));
    server.Post(R"(/sessions/([0-9a-zA-Z]+)/undo)", guarded([&s](const auto& req, auto& res) {
                  send(res, 200, json{{"ok", true}, {"next", question_json(s, s.undo(req.matches[1]))}});
                }));
    server.Post(R"(/sessions/([0-9a-zA-Z]+)/consideration)", guarded([&s](const auto& req, auto& res) {
                  const auto progress = s.add_consideration(req.matches[1], text(parse_body(req), "venue"));
                  send(res, 200, json{{"ok", true}, {"progress", progress_json(progress)}});
                }));
    server.Get(R"(/sessions/([0-9a-zA-Z]+)/summary)", guarded([&s](const auto& req, auto& res) {
                 const auto summary = s.summary(req.matches[1]);
                 send(res, 200,
                      json{{"progress", progress_json(summary.progress)},
                           {"personal", rows_json(s, summary.personal)},
                           {"consensus", rows_json(s, summary.consensus)},
                           {"warnings", summary.warnings}});
               }));
    server.Get(R"(/rankings/fields/([^/]+))", guarded([&s](const auto& req, auto& res) {
                 const std::string field = req.matches[1];
                 send(res, 200, json{{"field", field}, {"scores", rows_json(s, s.field_rankings(field))}});
               }));
    server.Get("/venues", guarded([&s](const auto& req, auto& res) {
                 const std::string prefix = req.has_param("prefix") ? req.get_param_value("prefix") : "";
                 std::size_t limit = 20;
                 if (req.has_param("limit")) limit = std::stoul(req.get_param_value("limit"));
                 json out = json::array();
                 for (const auto& [id, name] : s.search_venues(prefix, limit)) out.push_back({{"id", id}, {"name", name}});
                 send(res, 200, out);
               }));
  }
};

HttpServer::HttpServer(SurveyService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
    return impl_->port > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  impl_->port = port;
  return true;
}

int HttpServer::port() const { return impl_->port; }

void HttpServer::listen() {
  impl_->entered = true;
  if (!impl_->stop_requested) impl_->server.listen_after_bind();
  impl_->finished = true;
}

// A stop that arrives before the accept loop starts waits for it to start,
// so the request is never lost.
void HttpServer::stop() {
  if (!impl_) return;
  impl_->stop_requested = true;
  while (impl_->entered && !impl_->finished) {
    if (impl_->server.is_running()) {
      impl_->server.stop();
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

}  // namespace prefrank
