#include "gendet/study_http.hpp"

#include <httplib.h>

#include <mutex>

#include "gendet/rng.hpp"

namespace gendet {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const StudyError& e) {
      send_json(res, {{"error", e.what()}}, e.status());
    } catch (const json::exception& e) {
      send_json(res, {{"error", std::string("bad request body: ") + e.what()}}, 400);
    } catch (const std::invalid_argument& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body);
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return j;
}

}  // namespace

std::string study_description_page() {
  return R"(<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>Was this written by a person?</title></head>
<body>
<h1>Was this written by a person?</h1>
<p>You will read short passages. Some were written by people; the others were produced by a
computer program that continues text one word at a time.</p>
<p>Each passage starts out short. After every answer the passage grows to about twice its
length, and the newly added words are shown in bold. Answer again at every step with one of
four choices:</p>
<ul>
<li>definitely machine-generated</li>
<li>possibly machine-generated</li>
<li>possibly human-written</li>
<li>definitely human-written</li>
</ul>
<p>Answers cannot be changed once submitted. After the last step you are told whether your
final answer was right.</p>
<h2>Examples</h2>
<p><b>Human-written:</b> "good morrow, cousin. what news from the north? the roads were
foul, and the riders slow, but they are come at last."</p>
<p>Ordinary speech with a clear thread from sentence to sentence.</p>
<p><b>Machine-generated:</b> "good morrow, lord. i will not be the king, and the king is
the king, and i will not, sir, the duke of the house."</p>
<p>Locally fluent, but it repeats itself and the sense drifts.</p>
<p>Some passages contain a sentence asking for a particular answer. Please follow it.</p>
</body>
</html>
)";
}

void register_study_routes(httplib::Server& server, StudyService& service) {
  server.Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(study_description_page(), "text/html; charset=utf-8");
  });
  server.Get("/api/health", guarded([&service](const httplib::Request&, httplib::Response& res) {
               send_json(res, {{"ok", true}, {"events", service.event_count()}});
             }));
  server.Post("/api/studies", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto b = body_of(req);
                if (!b.contains("items_path")) throw StudyError(400, "items_path is required");
                const auto cfg = StudyConfig::from_json(b.value("config", json::object()));
                send_json(res, {{"study_id", service.create_study(b.at("items_path").get<std::string>(), cfg)}});
              }));
  server.Get("/api/studies/:id", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, service.study_status(req.path_params.at("id")));
             }));
  server.Post("/api/studies/:id/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto b = body_of(req);
                const auto rater = b.value("rater", std::string("anonymous"));
                send_json(res, {{"session_id", service.open_session(req.path_params.at("id"), rater)}});
              }));
  server.Get("/api/sessions/:id/next", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, service.next_item(req.path_params.at("id")));
             }));
  server.Post("/api/sessions/:id/votes", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto b = body_of(req);
                for (const char* k : {"item_id", "step", "option"})
                  if (!b.contains(k)) throw StudyError(400, std::string(k) + " is required");
                send_json(res, service.submit_vote(req.path_params.at("id"), b.at("item_id").get<std::string>(),
                                                   b.at("step").get<int>(), b.at("option").get<std::string>()));
              }));
  server.Get("/api/studies/:id/export", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               res.set_content(service.export_annotations(req.path_params.at("id")), "application/x-ndjson");
             }));
}

struct StudyClient::Impl {
  httplib::Client cli;
  Impl(const std::string& host, int port) : cli(host, port) {
    cli.set_connection_timeout(5, 0);
    cli.set_read_timeout(30, 0);
  }
};

StudyClient::StudyClient(std::string host, int port) : impl_(std::make_unique<Impl>(host, port)) {}
StudyClient::~StudyClient() = default;

namespace {

json checked(const httplib::Result& r, const std::string& what, int* status = nullptr) {
  if (!r) throw std::runtime_error(what + ": " + httplib::to_string(r.error()));
  if (status) *status = r->status;
  auto j = json::parse(r->body);
  if (!status && r->status != 200)
    throw std::runtime_error(what + ": HTTP " + std::to_string(r->status) + " " + j.value("error", r->body));
  return j;
}

}  // namespace

std::string StudyClient::create_study(const std::string& items_path, const json& config) {
  const json body = {{"items_path", items_path}, {"config", config}};
  return checked(impl_->cli.Post("/api/studies", body.dump(), "application/json"), "create study")
      .at("study_id")
      .get<std::string>();
}

std::string StudyClient::open_session(const std::string& study_id, const std::string& rater) {
  const json body = {{"rater", rater}};
  return checked(impl_->cli.Post("/api/studies/" + study_id + "/sessions", body.dump(), "application/json"),
                 "open session")
      .at("session_id")
      .get<std::string>();
}

json StudyClient::next(const std::string& session_id) {
  return checked(impl_->cli.Get("/api/sessions/" + session_id + "/next"), "next item");
}

json StudyClient::vote(const std::string& session_id, const std::string& item_id, int step,
                       const std::string& option, int* status) {
  const json body = {{"item_id", item_id}, {"step", step}, {"option", option}};
  return checked(impl_->cli.Post("/api/sessions/" + session_id + "/votes", body.dump(), "application/json"), "vote",
                 status);
}

std::string StudyClient::export_annotations(const std::string& study_id) {
  auto r = impl_->cli.Get("/api/studies/" + study_id + "/export");
  if (!r) throw std::runtime_error("export: " + httplib::to_string(r.error()));
  if (r->status != 200) throw std::runtime_error("export: HTTP " + std::to_string(r->status) + " " + r->body);
  return r->body;
}

bool StudyClient::healthy() {
  auto r = impl_->cli.Get("/api/health");
  return r && r->status == 200;
}

namespace {

std::optional<VoteOption> instructed_in(const std::string& segment) {
  for (VoteOption o : {VoteOption::definitely_machine, VoteOption::definitely_human})
    if (segment.find(honeypot_instruction(o)) != std::string::npos) return o;
  return std::nullopt;
}

}  // namespace

RaterPolicy always_correct_policy(std::map<std::string, Label> truths) {
  return [truths = std::move(truths)](const json& p) {
    if (auto o = instructed_in(p.at("segment").get<std::string>())) return *o;
    return truths.at(p.at("item_id").get<std::string>()) == Label::machine ? VoteOption::definitely_machine
                                                                       : VoteOption::definitely_human;
  };
}

RaterPolicy always_wrong_policy(std::map<std::string, Label> truths) {
  return [truths = std::move(truths)](const json& p) {
    return truths.at(p.at("item_id").get<std::string>()) == Label::machine ? VoteOption::possibly_human
                                                                       : VoteOption::possibly_machine;
  };
}

RaterPolicy coin_flip_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  auto mu = std::make_shared<std::mutex>();
  return [rng, mu](const json&) {
    std::lock_guard lock(*mu);
    return kAllVoteOptions[rng->below(4)];
  };
}

SyntheticSessionResult run_synthetic_session(StudyClient& client, const std::string& study_id,
                                             const std::string& rater, const RaterPolicy& policy,
                                             std::size_t max_items) {
  SyntheticSessionResult out;
  out.session_id = client.open_session(study_id, rater);
  while (out.items_completed < max_items) {
    json p = client.next(out.session_id);
    if (p.value("done", false)) break;
    while (!p.value("final", false)) {
      const VoteOption o = policy(p);
      p = client.vote(out.session_id, p.at("item_id").get<std::string>(), p.at("step").get<int>(),
                      std::string(to_string(o)));
    }
    const bool correct = p.contains("correct") && p["correct"].is_boolean() && p["correct"].get<bool>();
    out.finals.emplace_back(p.at("item_id").get<std::string>(), correct);
    ++out.items_completed;
  }
  return out;
}

}  // namespace gendet
