#include "gendet/study.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "gendet/corpus.hpp"
#include "gendet/rng.hpp"
#include "gendet/tokenizer.hpp"

namespace gendet {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// Number of code points in a UTF-8 prefix.
std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

json opt_strategy(const std::optional<Strategy>& s) { return s ? json(to_string(*s)) : json(nullptr); }

}  // namespace

std::vector<std::string> StudyConfig::validate() const {
  if (reveal_lengths.empty()) throw std::invalid_argument("study config: reveal_lengths is empty");
  for (std::size_t i = 0; i < reveal_lengths.size(); ++i) {
    if (reveal_lengths[i] < 1) throw std::invalid_argument("study config: reveal lengths must be positive");
    if (i > 0 && reveal_lengths[i] <= reveal_lengths[i - 1])
      throw std::invalid_argument("study config: reveal lengths must be strictly ascending");
  }
  if (!(honeypot_rate >= 0.0 && honeypot_rate <= 0.5))
    throw std::invalid_argument("study config: honeypot_rate must lie in [0, 0.5]");
  if (max_raters < 1) throw std::invalid_argument("study config: max_raters must be >= 1");
  std::vector<std::string> warnings;
  for (std::size_t i = 1; i < reveal_lengths.size(); ++i) {
    const double ratio = static_cast<double>(reveal_lengths[i]) / reveal_lengths[i - 1];
    if (ratio < 1.5 || ratio > 2.5)
      warnings.push_back("reveal length " + std::to_string(reveal_lengths[i]) + " is not about double " +
                         std::to_string(reveal_lengths[i - 1]));
  }
  return warnings;
}

json StudyConfig::to_json() const {
  return {{"reveal_lengths", reveal_lengths},
          {"honeypot_rate", honeypot_rate},
          {"max_raters", max_raters},
          {"feedback", feedback},
          {"seed", seed}};
}

StudyConfig StudyConfig::from_json(const json& j) {
  StudyConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw std::invalid_argument("study config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "reveal_lengths") c.reveal_lengths = v.get<std::vector<int>>();
    else if (k == "honeypot_rate") c.honeypot_rate = v.get<double>();
    else if (k == "max_raters") c.max_raters = v.get<int>();
    else if (k == "feedback") c.feedback = v.get<bool>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else throw std::invalid_argument("study config: unknown field '" + k + "'");
  }
  return c;
}

ItemTruth StudyItem::truth() const { return {id, label, strategy, honeypot, instructed}; }

std::string StudyItem::segment(std::size_t step, std::size_t n_steps) const {
  std::string s = text.substr(0, segment_ends[step]);
  if (honeypot && step + 1 == n_steps) {
    if (!s.empty()) s.push_back(' ');
    s += honeypot_sentence;
  }
  return s;
}

std::string honeypot_instruction(VoteOption instructed) {
  const char* answer = collapse(instructed) == Label::machine ? "definitely machine" : "definitely human";
  return std::string("Attention check: regardless of the text above, answer \"") + answer + "\" for this item.";
}

std::vector<StudyItem> prepare_items(const Dataset& excerpts, const StudyConfig& config) {
  config.validate();
  if (excerpts.empty()) throw std::invalid_argument("study: no items");
  std::vector<StudyItem> items;
  std::map<std::string, int> seen;
  for (const auto& e : excerpts) {
    if (seen[e.id]++) throw std::invalid_argument("study: duplicate item id '" + e.id + "'");
    const auto ends = token_end_offsets(e.text);
    if (ends.size() != e.tokens.size())
      throw std::invalid_argument("study: text of item '" + e.id + "' does not split into its " +
                                  std::to_string(e.tokens.size()) + " tokens");
    if (ends.empty()) throw std::invalid_argument("study: item '" + e.id + "' is empty");
    StudyItem it;
    it.id = e.id;
    it.label = e.label;
    it.strategy = e.strategy;
    it.text = e.text;
    for (int len : config.reveal_lengths)
      it.segment_ends.push_back(ends[std::min(ends.size(), static_cast<std::size_t>(len)) - 1]);
    items.push_back(std::move(it));
  }

  const auto n_honey = static_cast<std::size_t>(std::llround(config.honeypot_rate * static_cast<double>(items.size())));
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(config.seed, 0x40e7));
  rng.shuffle(order.begin(), order.end());
  for (std::size_t k = 0; k < n_honey; ++k) {
    auto& it = items[order[k]];
    it.honeypot = true;
    it.instructed = rng.below(2) == 0 ? VoteOption::definitely_machine : VoteOption::definitely_human;
    it.honeypot_sentence = honeypot_instruction(*it.instructed);
  }
  return items;
}

StudyService::StudyService(std::string log_path) : log_path_(std::move(log_path)) {
  std::string contents;
  {
    std::ifstream in(log_path_, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      contents = ss.str();
    }
  }
  std::size_t keep = contents.size();
  if (!contents.empty() && contents.back() != '\n') keep = contents.rfind('\n') == std::string::npos ? 0 : contents.rfind('\n') + 1;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < keep) {
    const std::size_t nl = contents.find('\n', pos);
    const std::string line = contents.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      apply(json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("event log " + log_path_ + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open event log " + log_path_ + ": " + std::strerror(errno));
  if (keep < contents.size() && ::ftruncate(fd_, static_cast<off_t>(keep)) != 0)
    throw std::runtime_error("cannot drop torn event log tail: " + std::string(std::strerror(errno)));
}

StudyService::~StudyService() {
  if (fd_ >= 0) ::close(fd_);
}

void StudyService::append(const json& event) {
  const std::string line = event.dump() + '\n';
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t w = ::write(fd_, line.data() + off, line.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw StudyError(500, "event log write failed: " + std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(w);
  }
  if (::fdatasync(fd_) != 0) throw StudyError(500, "event log sync failed: " + std::string(std::strerror(errno)));
}

StudyService::Study& StudyService::study_at(const std::string& id) {
  auto it = studies_.find(id);
  if (it == studies_.end()) throw StudyError(404, "unknown study '" + id + "'");
  return it->second;
}

const StudyService::Study& StudyService::study_at(const std::string& id) const {
  auto it = studies_.find(id);
  if (it == studies_.end()) throw StudyError(404, "unknown study '" + id + "'");
  return it->second;
}

StudyService::Session& StudyService::session_at(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw StudyError(404, "unknown session '" + id + "'");
  return it->second;
}

void StudyService::apply(const json& ev) {
  const auto type = ev.at("ev").get<std::string>();
  if (type == "study_created") {
    Study st;
    st.id = ev.at("study_id").get<std::string>();
    st.items_path = ev.at("items_path").get<std::string>();
    st.config = StudyConfig::from_json(ev.at("config"));
    for (const auto& j : ev.at("items")) {
      StudyItem it;
      it.id = j.at("id").get<std::string>();
      it.label = parse_label(j.at("label").get<std::string>());
      if (!j.at("strategy").is_null()) it.strategy = parse_strategy(j.at("strategy").get<std::string>());
      it.text = j.at("text").get<std::string>();
      it.segment_ends = j.at("ends").get<std::vector<std::size_t>>();
      it.honeypot = j.at("honeypot").get<bool>();
      if (!j.at("instructed").is_null()) it.instructed = parse_vote_option(j.at("instructed").get<std::string>());
      it.honeypot_sentence = j.at("sentence").get<std::string>();
      st.item_index.emplace(it.id, st.items.size());
      st.items.push_back(std::move(it));
    }
    st.completed.assign(st.items.size(), 0);
    st.reserved.assign(st.items.size(), 0);
    if (studies_.count(st.id)) throw std::runtime_error("study '" + st.id + "' created twice");
    study_order_.push_back(st.id);
    studies_.emplace(st.id, std::move(st));
  } else if (type == "session_opened") {
    Session se;
    se.id = ev.at("session_id").get<std::string>();
    se.study_id = ev.at("study_id").get<std::string>();
    se.rater = ev.at("rater").get<std::string>();
    Study& st = study_at(se.study_id);
    se.ordinal = st.sessions.size();
    st.sessions.push_back(se.id);
    if (sessions_.count(se.id)) throw std::runtime_error("session '" + se.id + "' opened twice");
    sessions_.emplace(se.id, std::move(se));
  } else if (type == "item_assigned") {
    Session& se = session_at(ev.at("session_id").get<std::string>());
    Study& st = study_at(se.study_id);
    const std::size_t item = st.item_index.at(ev.at("item_id").get<std::string>());
    if (se.current) throw std::runtime_error("item assigned while another is in progress");
    se.assignments.push_back({item, 0, {}, {}});
    se.current = se.assignments.size() - 1;
    ++st.reserved[item];
  } else if (type == "vote_cast") {
    Session& se = session_at(ev.at("session_id").get<std::string>());
    Study& st = study_at(se.study_id);
    if (!se.current) throw std::runtime_error("vote without an item in progress");
    Assignment& a = se.assignments[*se.current];
    if (st.items[a.item].id != ev.at("item_id").get<std::string>() || ev.at("step").get<int>() != a.next_step)
      throw std::runtime_error("vote does not match the item in progress");
    a.votes.push_back(parse_vote_option(ev.at("option").get<std::string>()));
    a.times.push_back(ev.at("ts").get<std::int64_t>());
    st.vote_order.push_back({se.id, *se.current, a.next_step});
    ++a.next_step;
    if (static_cast<std::size_t>(a.next_step) == st.config.reveal_lengths.size()) {
      --st.reserved[a.item];
      ++st.completed[a.item];
      se.current.reset();
    }
  } else {
    throw std::runtime_error("unknown event '" + type + "'");
  }
  ++events_;
}

std::string StudyService::create_study(const std::string& items_path, const StudyConfig& config) {
  Dataset items;
  try {
    items = read_dataset(items_path);
  } catch (const std::exception& e) {
    throw StudyError(400, e.what());
  }
  return create_study(items, config, items_path);
}

std::string StudyService::create_study(const Dataset& excerpts, const StudyConfig& config,
                                       const std::string& items_path) {
  std::vector<StudyItem> items;
  try {
    items = prepare_items(excerpts, config);
  } catch (const std::invalid_argument& e) {
    throw StudyError(400, e.what());
  }
  json jitems = json::array();
  for (const auto& it : items)
    jitems.push_back({{"id", it.id},
                      {"label", to_string(it.label)},
                      {"strategy", opt_strategy(it.strategy)},
                      {"text", it.text},
                      {"ends", it.segment_ends},
                      {"honeypot", it.honeypot},
                      {"instructed", it.instructed ? json(to_string(*it.instructed)) : json(nullptr)},
                      {"sentence", it.honeypot_sentence}});
  std::unique_lock lock(mu_);
  const std::string id = "study-" + std::to_string(study_order_.size() + 1);
  const json ev = {{"ev", "study_created"}, {"study_id", id},     {"items_path", items_path},
                   {"config", config.to_json()}, {"items", jitems}, {"ts", now_ms()}};
  append(ev);
  apply(ev);
  return id;
}

std::string StudyService::open_session(const std::string& study_id, const std::string& rater) {
  std::unique_lock lock(mu_);
  study_at(study_id);
  const std::string id = "session-" + std::to_string(sessions_.size() + 1);
  const json ev = {
      {"ev", "session_opened"}, {"study_id", study_id}, {"session_id", id}, {"rater", rater}, {"ts", now_ms()}};
  append(ev);
  apply(ev);
  return id;
}

std::optional<std::size_t> StudyService::choose_item(const Study& st, const Session& se) const {
  std::vector<bool> served(st.items.size(), false);
  for (const auto& a : se.assignments) served[a.item] = true;
  const std::uint64_t session_key = derive_seed(st.config.seed, 0x5e55 + se.ordinal);
  std::optional<std::size_t> best;
  int best_load = 0;
  std::uint64_t best_key = 0;
  for (std::size_t i = 0; i < st.items.size(); ++i) {
    const int load = st.completed[i] + st.reserved[i];
    if (served[i] || load >= st.config.max_raters) continue;
    const std::uint64_t key = mix64(session_key ^ mix64(i));
    if (!best || load < best_load || (load == best_load && key < best_key)) {
      best = i;
      best_load = load;
      best_key = key;
    }
  }
  return best;
}

json StudyService::step_payload(const Study& st, const Session& se, const Assignment& a) const {
  const StudyItem& it = st.items[a.item];
  const std::size_t n = st.config.reveal_lengths.size();
  const auto step = static_cast<std::size_t>(a.next_step);
  const std::string seg = it.segment(step, n);
  const std::size_t start = step == 0 ? 0 : code_points(it.segment(step - 1, n));
  return {{"session_id", se.id},
          {"item_id", it.id},
          {"step", a.next_step},
          {"n_steps", n},
          {"length", st.config.reveal_lengths[step]},
          {"segment", seg},
          {"new_text_start", start}};
}

json StudyService::final_payload(const Study& st, const Assignment& a) const {
  const StudyItem& it = st.items[a.item];
  const bool correct = collapse(a.votes.back()) == it.truth().scoring_label();
  return {{"final", true}, {"item_id", it.id}, {"correct", st.config.feedback ? json(correct) : json(nullptr)}};
}

json StudyService::next_item(const std::string& session_id) {
  std::unique_lock lock(mu_);
  Session& se = session_at(session_id);
  Study& st = study_at(se.study_id);
  if (se.current) return step_payload(st, se, se.assignments[*se.current]);
  const auto pick = choose_item(st, se);
  if (!pick) return {{"done", true}};
  const json ev = {
      {"ev", "item_assigned"}, {"session_id", se.id}, {"item_id", st.items[*pick].id}, {"ts", now_ms()}};
  append(ev);
  apply(ev);
  return step_payload(st, se, se.assignments[*se.current]);
}

json StudyService::submit_vote(const std::string& session_id, const std::string& item_id, int step,
                               const std::string& option) {
  std::unique_lock lock(mu_);
  VoteOption opt;
  try {
    opt = parse_vote_option(option);
  } catch (const std::invalid_argument& e) {
    throw StudyError(400, e.what());
  }
  Session& se = session_at(session_id);
  Study& st = study_at(se.study_id);
  const int n = static_cast<int>(st.config.reveal_lengths.size());

  std::optional<std::size_t> which;
  for (std::size_t i = 0; i < se.assignments.size(); ++i)
    if (st.items[se.assignments[i].item].id == item_id) which = i;
  if (!which) throw StudyError(409, "item '" + item_id + "' is not assigned to this session");
  Assignment& a = se.assignments[*which];

  if (step >= 0 && step < a.next_step) {
    if (a.votes[static_cast<std::size_t>(step)] != opt)
      throw StudyError(409, "step " + std::to_string(step) + " of '" + item_id + "' was already answered differently");
    if (step + 1 == n) return final_payload(st, a);
    Assignment view = a;
    view.next_step = step + 1;
    return step_payload(st, se, view);
  }
  if (step != a.next_step || step >= n)
    throw StudyError(409, "out-of-order vote: expected step " + std::to_string(a.next_step) + ", got " +
                              std::to_string(step));

  const json ev = {{"ev", "vote_cast"}, {"session_id", se.id}, {"item_id", item_id},
                   {"step", step},      {"option", option},    {"ts", now_ms()}};
  append(ev);
  apply(ev);
  if (step + 1 == n) return final_payload(st, a);
  return step_payload(st, se, a);
}

std::string StudyService::export_annotations(const std::string& study_id) const {
  std::shared_lock lock(mu_);
  const Study& st = study_at(study_id);
  std::string out;
  out += json{{"type", "study"},
              {"study_id", st.id},
              {"items_path", st.items_path},
              {"reveal_lengths", st.config.reveal_lengths},
              {"config", st.config.to_json()}}
             .dump();
  out += '\n';
  for (const auto& it : st.items) {
    out += json{{"type", "item"},
                {"item_id", it.id},
                {"label", to_string(it.label)},
                {"strategy", opt_strategy(it.strategy)},
                {"honeypot", it.honeypot},
                {"instructed", it.instructed ? json(to_string(*it.instructed)) : json(nullptr)}}
               .dump();
    out += '\n';
  }
  for (const auto& ref : st.vote_order) {
    const Session& se = sessions_.at(ref.session);
    const Assignment& a = se.assignments[ref.assignment];
    const auto s = static_cast<std::size_t>(ref.step);
    out += json{{"type", "vote"},
                {"session_id", se.id},
                {"rater", se.rater},
                {"item_id", st.items[a.item].id},
                {"step", ref.step},
                {"option", to_string(a.votes[s])},
                {"ts", a.times[s]}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<std::string> StudyService::study_ids() const {
  std::shared_lock lock(mu_);
  return study_order_;
}

json StudyService::study_status(const std::string& study_id) const {
  std::shared_lock lock(mu_);
  const Study& st = study_at(study_id);
  std::size_t honey = 0, done = 0;
  int max_completed = 0;
  for (std::size_t i = 0; i < st.items.size(); ++i) {
    honey += st.items[i].honeypot;
    done += st.completed[i];
    max_completed = std::max(max_completed, st.completed[i]);
  }
  return {{"study_id", st.id},
          {"items", st.items.size()},
          {"honeypots", honey},
          {"sessions", st.sessions.size()},
          {"completed_assignments", done},
          {"max_raters_on_an_item", max_completed},
          {"config", st.config.to_json()}};
}

std::size_t StudyService::event_count() const {
  std::shared_lock lock(mu_);
  return events_;
}

}  // namespace gendet
