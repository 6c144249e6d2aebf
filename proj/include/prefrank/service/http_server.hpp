#pragma once

#include <memory>
#include <string>

#include "prefrank/error.hpp"
#include "prefrank/service/survey_service.hpp"

namespace prefrank {

// HTTP status for a library error code.
int http_status(ErrorCode code);

// JSON routes over a SurveyService:
//   POST /sessions                      -> 201 {session_id}
//   GET  /sessions/{id}                 -> session info
//   GET  /sessions/{id}/next[?continue=true]
//   POST /sessions/{id}/answer[?continue=true]
//   POST /sessions/{id}/undo
//   POST /sessions/{id}/consideration
//   GET  /sessions/{id}/summary
//   GET  /rankings/fields/{field}
//   GET  /venues?prefix=..&limit=..
//   GET  /health
// Errors come back as {"error": CODE, "message": text}.
class HttpServer {
 public:
  explicit HttpServer(SurveyService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // False when the address cannot be bound. Port 0 picks a free port.
  bool bind(const std::string& host, int port);
  int port() const;
  // Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prefrank
