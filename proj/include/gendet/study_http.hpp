#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gendet/study.hpp"

namespace httplib {
class Server;
}

namespace gendet {

// Routes:
//   GET  /                              static study description page
//   GET  /api/health
//   POST /api/studies                   {items_path, config} -> {study_id}
//   GET  /api/studies/{id}              status counters
//   POST /api/studies/{id}/sessions     {rater} -> {session_id}
//   GET  /api/sessions/{id}/next        step payload | {done}
//   POST /api/sessions/{id}/votes       {item_id, step, option} -> step payload | {final, correct}
//   GET  /api/studies/{id}/export       line-delimited records
// Errors are {"error": message} with a 4xx/5xx status.
void register_study_routes(httplib::Server& server, StudyService& service);

std::string study_description_page();

class StudyClient {
 public:
  StudyClient(std::string host, int port);
  ~StudyClient();

  std::string create_study(const std::string& items_path, const nlohmann::json& config);
  std::string open_session(const std::string& study_id, const std::string& rater);
  nlohmann::json next(const std::string& session_id);
  // Returns the response body; `status` receives the HTTP status.
  nlohmann::json vote(const std::string& session_id, const std::string& item_id, int step,
                      const std::string& option, int* status = nullptr);
  std::string export_annotations(const std::string& study_id);
  bool healthy();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Chooses an option from a step payload.
using RaterPolicy = std::function<VoteOption(const nlohmann::json& payload)>;

// Answers the true class with "definitely", or the instructed option when the
// segment carries an attention-check sentence.
RaterPolicy always_correct_policy(std::map<std::string, Label> truths);
RaterPolicy always_wrong_policy(std::map<std::string, Label> truths);
RaterPolicy coin_flip_policy(std::uint64_t seed);

struct SyntheticSessionResult {
  std::string session_id;
  std::size_t items_completed = 0;
  std::vector<std::pair<std::string, bool>> finals;  // item id, correct flag
};

// Opens a session and votes through items until the service reports done or
// max_items items are finished.
SyntheticSessionResult run_synthetic_session(StudyClient& client, const std::string& study_id,
                                             const std::string& rater, const RaterPolicy& policy,
                                             std::size_t max_items = static_cast<std::size_t>(-1));

}  // namespace gendet
