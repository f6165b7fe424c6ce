#pragma once

// HTTP front end for SessionService. Routing is a plain function over
// ApiRequest so endpoints can be exercised without sockets; serve() binds
// it to an httplib server.
//
//   POST /sessions                        create (body: participant_id, demographic?, treatment?)
//   GET  /sessions/{id}                   full record
//   GET  /sessions/{id}/instructions      condition text and picture id
//   GET  /sessions/{id}/state             latest state message
//   POST /sessions/{id}/channel           client key message -> server messages
//   GET  /sessions/{id}/channel?after=N   replay messages with seq > N
//   POST /sessions/{id}/survey            five answers and the 0..100 slider
//   POST /sessions/{id}/abandon
//   GET  /export?format=csv|jsonl[&include_abandoned=1][&include_in_progress=1]
//   GET  /conditions
//   GET  /health

#include <map>
#include <regex>
#include <string>

#include <httplib.h>
// <resolv.h> (via httplib) defines _res, which clashes with Eigen parameter names.
#ifdef _res
#undef _res
#endif
#include <nlohmann/json.hpp>

#include "pigchase/session.hpp"

namespace pigchase::http {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline ApiResponse json_response(int status, const nlohmann::ordered_json& j) {
  return {status, "application/json", j.dump()};
}

inline ApiResponse error_response(int status, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = message;
  return json_response(status, j);
}

inline int status_for(service::ErrorCode code) {
  switch (code) {
    case service::ErrorCode::BadRequest: return 400;
    case service::ErrorCode::NotFound: return 404;
    case service::ErrorCode::Conflict: return 409;
    case service::ErrorCode::Storage: return 500;
  }
  return 500;
}

inline nlohmann::ordered_json messages_json(const std::vector<service::ChannelMessage>& ms) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& m : ms) arr.push_back(service::to_json(m));
  return arr;
}

inline nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body.empty() ? "{}" : body);
  } catch (const nlohmann::json::parse_error& e) {
    throw service::ServiceError(service::ErrorCode::BadRequest, std::string("invalid JSON: ") + e.what());
  }
}

inline bool flag(const std::map<std::string, std::string>& q, const std::string& key) {
  auto it = q.find(key);
  return it != q.end() && (it->second == "1" || it->second == "true");
}

class Api {
 public:
  explicit Api(service::SessionService& svc) : svc_(svc) {}

  ApiResponse handle(const ApiRequest& req) {
    try {
      return dispatch(req);
    } catch (const service::ServiceError& e) {
      return error_response(status_for(e.code()), e.what());
    } catch (const RecordError& e) {
      return error_response(400, e.what());
    } catch (const nlohmann::json::exception& e) {
      return error_response(400, std::string("bad request body: ") + e.what());
    }
  }

 private:
  ApiResponse dispatch(const ApiRequest& req) {
    static const std::regex session_re(R"(^/sessions/([A-Za-z0-9_-]+)(/([a-z]+))?$)");
    const auto& m = req.method;
    if (req.path == "/health" && m == "GET") return json_response(200, {{"status", "ok"}});
    if (req.path == "/conditions" && m == "GET") {
      auto arr = nlohmann::ordered_json::array();
      for (Treatment t : kAllTreatments) arr.push_back(service::condition_json(svc_.config().conditions.at(t)));
      return json_response(200, arr);
    }
    if (req.path == "/sessions" && m == "POST") return create(req);
    if (req.path == "/export" && m == "GET") return export_sessions(req);

    std::smatch match;
    if (!std::regex_match(req.path, match, session_re)) return error_response(404, "no route for " + req.path);
    const std::string id = match[1];
    const std::string sub = match[3];
    if (sub.empty() && m == "GET") return json_response(200, to_json(svc_.record(id)));
    if (sub == "instructions" && m == "GET") return json_response(200, service::condition_json(svc_.instructions(id)));
    if (sub == "state" && m == "GET") return json_response(200, service::to_json(svc_.current_state(id)));
    if (sub == "channel" && m == "GET") {
      std::int64_t after = -1;
      if (auto it = req.query.find("after"); it != req.query.end()) {
        try {
          after = std::stoll(it->second);
        } catch (const std::exception&) {
          return error_response(400, "after must be an integer");
        }
      }
      return json_response(200, {{"messages", messages_json(svc_.messages_after(id, after))}});
    }
    if (sub == "channel" && m == "POST") {
      const auto msg = service::message_from_json(parse_body(req.body));
      const auto result = svc_.handle_message(id, msg);
      nlohmann::ordered_json j;
      j["messages"] = messages_json(result.messages);
      j["trials_complete"] = result.session_trials_complete;
      return json_response(200, j);
    }
    if (sub == "survey" && m == "POST") {
      svc_.submit_survey(id, survey_from_json(parse_body(req.body)));
      return json_response(200, {{"status", "Complete"}});
    }
    if (sub == "abandon" && m == "POST") {
      svc_.abandon_session(id);
      return json_response(200, {{"status", "Abandoned"}});
    }
    return error_response(405, m + " not allowed on " + req.path);
  }

  ApiResponse create(const ApiRequest& req) {
    const auto body = parse_body(req.body);
    service::CreateRequest cr;
    if (!body.contains("participant_id") || !body["participant_id"].is_string())
      return error_response(400, "participant_id (string) required");
    cr.participant_id = body["participant_id"].get<std::string>();
    if (body.contains("demographic") && !body["demographic"].is_null()) {
      cr.demographic = parse_demographic(body["demographic"].get<std::string>());
      if (!cr.demographic) return error_response(400, "unknown demographic");
    }
    if (body.contains("treatment") && !body["treatment"].is_null()) {
      cr.treatment = parse_treatment(body["treatment"].get<std::string>());
      if (!cr.treatment) return error_response(400, "unknown treatment");
    }
    const auto res = svc_.create_session(cr);
    nlohmann::ordered_json j;
    j["session_id"] = res.session_id;
    j["treatment"] = std::string(to_string(res.treatment));
    j["instructions"] = service::condition_json(res.condition);
    j["duplicate_participant"] = res.duplicate_participant;
    j["state"] = service::to_json(res.initial_state);
    return json_response(201, j);
  }

  ApiResponse export_sessions(const ApiRequest& req) {
    service::ExportFilter f{flag(req.query, "include_abandoned"), flag(req.query, "include_in_progress")};
    const auto out = svc_.export_sessions(f);
    std::string format = "csv";
    if (auto it = req.query.find("format"); it != req.query.end()) format = it->second;
    if (format == "csv") return {200, "text/csv", out.participants_csv};
    if (format == "jsonl") return {200, "application/x-ndjson", out.sessions_jsonl};
    return error_response(400, "format must be csv or jsonl");
  }

  service::SessionService& svc_;
};

// Registers every route on an httplib server. The caller owns listen/stop.
inline void mount(httplib::Server& server, Api& api) {
  auto bridge = [&api](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const ApiResponse out = api.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(R"(/.*)", bridge);
  server.Post(R"(/.*)", bridge);
}

}  // namespace pigchase::http
