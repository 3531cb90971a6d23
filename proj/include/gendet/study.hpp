#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gendet/dataset.hpp"
#include "gendet/rater.hpp"

namespace gendet {

struct StudyConfig {
  std::vector<int> reveal_lengths{8, 16, 32, 64, 128};
  double honeypot_rate = 0.10;
  int max_raters = 3;
  bool feedback = true;
  std::uint64_t seed = 1;

  // Throws on hard violations; returns warnings (lengths not roughly doubling).
  std::vector<std::string> validate() const;
  nlohmann::json to_json() const;
  // Missing fields keep their defaults.
  static StudyConfig from_json(const nlohmann::json& j);
};

// Errors carry the HTTP status the API reports them with.
class StudyError : public std::runtime_error {
 public:
  StudyError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct StudyItem {
  std::string id;
  Label label = Label::human;
  std::optional<Strategy> strategy;
  std::string text;
  std::vector<std::size_t> segment_ends;  // byte length of the segment at each step
  bool honeypot = false;
  std::optional<VoteOption> instructed;
  std::string honeypot_sentence;  // appended to the final segment

  ItemTruth truth() const;
  std::string segment(std::size_t step, std::size_t n_steps) const;
};

// The instruction sentence placed at the end of a honeypot's last segment.
std::string honeypot_instruction(VoteOption instructed);

// Splits each excerpt's text at the configured reveal lengths, and
// pre-designates round(rate * n) honeypots by a seeded draw.
std::vector<StudyItem> prepare_items(const Dataset& excerpts, const StudyConfig& config);

// Append-only event log: every state change is written and flushed before it
// is applied, and the in-memory state is a pure function of the log.
class StudyService {
 public:
  // Replays an existing log, dropping a torn final line.
  explicit StudyService(std::string log_path);
  ~StudyService();
  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  std::string create_study(const std::string& items_path, const StudyConfig& config);
  std::string create_study(const Dataset& items, const StudyConfig& config, const std::string& items_path = "");
  std::string open_session(const std::string& study_id, const std::string& rater);
  nlohmann::json next_item(const std::string& session_id);
  nlohmann::json submit_vote(const std::string& session_id, const std::string& item_id, int step,
                             const std::string& option);
  std::string export_annotations(const std::string& study_id) const;

  std::vector<std::string> study_ids() const;
  nlohmann::json study_status(const std::string& study_id) const;
  std::size_t event_count() const;

 private:
  struct Assignment {
    std::size_t item = 0;
    int next_step = 0;  // == n_steps once complete
    std::vector<VoteOption> votes;
    std::vector<std::int64_t> times;
  };
  struct Session {
    std::string id, study_id, rater;
    std::size_t ordinal = 0;  // within its study
    std::vector<Assignment> assignments;
    std::optional<std::size_t> current;  // index into assignments
  };
  struct Study {
    std::string id, items_path;
    StudyConfig config;
    std::vector<StudyItem> items;
    std::map<std::string, std::size_t> item_index;
    std::vector<int> completed, reserved;
    std::vector<std::string> sessions;
    struct VoteRef {
      std::string session;
      std::size_t assignment;
      int step;
    };
    std::vector<VoteRef> vote_order;
  };

  void append(const nlohmann::json& event);
  void apply(const nlohmann::json& event);
  nlohmann::json step_payload(const Study& st, const Session& se, const Assignment& a) const;
  nlohmann::json final_payload(const Study& st, const Assignment& a) const;
  Study& study_at(const std::string& id);
  const Study& study_at(const std::string& id) const;
  Session& session_at(const std::string& id);
  std::optional<std::size_t> choose_item(const Study& st, const Session& se) const;

  std::string log_path_;
  int fd_ = -1;
  mutable std::shared_mutex mu_;
  std::map<std::string, Study> studies_;
  std::map<std::string, Session> sessions_;
  std::vector<std::string> study_order_;
  std::size_t events_ = 0;
};

}  // namespace gendet
