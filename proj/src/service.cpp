#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "imprint/orchestrator.hpp"

namespace imprint::orchestrator {

using nlohmann::json;

namespace {

int status_for(const std::string& kind) {
  if (kind == "usage" || kind == "contract" || kind == "parse" || kind == "range") return 400;
  if (kind == "gate") return 403;
  if (kind == "not_found") return 404;
  if (kind == "state") return 409;
  if (kind == "qa") return 422;
  return 500;
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, const Error& e) {
  json body = {{"error", e.kind()}, {"message", e.what()}};
  if (const auto* refused = dynamic_cast<const ExportRefused*>(&e)) body["blocking"] = refused->blocking();
  send(res, status_for(e.kind()), body);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto body = json::parse(req.body);
    if (!body.is_object()) throw ContractError("request body must be a JSON object");
    return body;
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("request body is not JSON: ") + e.what());
  }
}

std::string field(const json& body, const char* name) {
  const auto it = body.find(name);
  if (it == body.end() || it->is_null()) return {};
  if (!it->is_string()) throw ContractError(std::string(name) + " must be a string");
  return it->get<std::string>();
}

json queue_view(const State& s) {
  struct Item {
    std::size_t tournament_order;
    int rank;
    json view;
  };
  std::vector<Item> items;
  const auto& tournaments = s.archive.tournaments();
  for (const auto& p : s.archive.with_status(ProposalStatus::flagged)) {
    const auto note = s.archive.review_note(p.id);
    json view = {{"proposal", p}, {"tournament_id", nullptr}, {"rank", nullptr}, {"rationale", ""}};
    std::size_t order = tournaments.size();
    int rank = 0;
    if (note) {
      view["tournament_id"] = note->tournament_id;
      view["rank"] = note->rank;
      view["rationale"] = note->rationale;
      rank = note->rank;
      for (std::size_t i = 0; i < tournaments.size(); ++i) {
        if (tournaments[i].id == note->tournament_id) {
          order = i;
          view["transcripts"] = tournaments[i].matches_of(p.id);
        }
      }
    }
    items.push_back({order, rank, std::move(view)});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.tournament_order, a.rank) < std::tie(b.tournament_order, b.rank);
  });
  json out = json::array();
  for (auto& i : items) out.push_back(std::move(i.view));
  return out;
}

json proposal_view(const State& s, const std::string& id) {
  json out = {{"proposal", s.archive.proposal(id)}, {"decisions", s.archive.decisions_for(id)}};
  const auto note = s.archive.review_note(id);
  out["review"] = note ? json{{"tournament_id", note->tournament_id}, {"rank", note->rank},
                              {"rationale", note->rationale}}
                       : json(nullptr);
  const auto project = s.archive.project_for(id);
  out["project"] = project ? json(*project) : json(nullptr);
  return out;
}

json transcript_view(const State& s, const std::string& id) {
  const auto& t = s.archive.tournament(id);
  json rounds = json::array();
  for (std::size_t r = 1; r <= t.rounds.size(); ++r) {
    json matches = json::array();
    for (const auto& m : t.transcripts) {
      if (m.round == static_cast<int>(r)) matches.push_back(m);
    }
    rounds.push_back({{"round", r}, {"matches", matches}});
  }
  return {{"tournament_id", t.id}, {"champion", t.champion}, {"entrants", t.bracket.entrants},
          {"ranking", t.ranked_ids()}, {"rounds", rounds}};
}

json catalog_view(const State& s) {
  return {{"titles", s.titles}, {"projects", s.archive.projects()}, {"exports", s.exports},
          {"milestones", s.milestones}};
}

}  // namespace

struct Service::Impl {
  explicit Impl(Orchestrator o) : orch(std::move(o)), snapshot(orch.snapshot_copy()) {
    writer = std::thread([this] { drain(); });
  }

  ~Impl() {
    stop();
    {
      std::lock_guard lock(mutex);
      closing = true;
    }
    cv.notify_all();
    if (writer.joinable()) writer.join();
  }

  void stop() {
    server.stop();
    if (listener.joinable()) listener.join();
  }

  // Runs `work` on the writer thread and waits for its result. Exceptions
  // travel back through the future.
  template <class F>
  auto submit(F work) -> decltype(work(std::declval<Orchestrator&>())) {
    using R = decltype(work(std::declval<Orchestrator&>()));
    auto task = std::make_shared<std::packaged_task<R()>>([this, work = std::move(work)]() mutable {
      struct Publish {
        Impl* self;
        ~Publish() { self->publish(); }
      } publish_after{this};
      return work(orch);
    });
    auto result = task->get_future();
    {
      std::lock_guard lock(mutex);
      if (closing) throw StoreError("service is shutting down");
      queue.push_back([task] { (*task)(); });
    }
    cv.notify_one();
    return result.get();
  }

  void drain() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [this] { return closing || !queue.empty(); });
        if (queue.empty()) return;
        job = std::move(queue.front());
        queue.pop_front();
      }
      job();
    }
  }

  void publish() {
    auto next = orch.snapshot_copy();
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(next);
  }

  std::shared_ptr<const State> read() const {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  }

  template <class F>
  void guarded(httplib::Response& res, F body) {
    try {
      body();
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  }

  void routes() {
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      auto s = read();
      send(res, 200, {{"status", "ok"}, {"events", s->event_count}, {"cycles", s->cycles.size()},
                      {"titles", s->titles.size()}});
    });
    server.Get("/api/queue", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, queue_view(*read())); });
    });
    server.Get(R"(/api/proposals/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, proposal_view(*read(), req.matches[1])); });
    });
    server.Get(R"(/api/tournaments/([^/]+)/transcript)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, transcript_view(*read(), req.matches[1])); });
    });
    server.Get("/api/catalog", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, catalog_view(*read())); });
    });
    // Reads title files, so it queues behind writes instead of racing them.
    server.Get(R"(/api/titles/([^/]+)/readiness)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        send(res, 200, submit([id](Orchestrator& o) { return json(o.readiness(id)); }));
      });
    });
    server.Post(R"(/api/proposals/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        DecisionAction action;
        std::string feedback, actor;
        try {
          const auto body = parse_body(req);
          action = parse_decision_action(field(body, "action"));
          feedback = field(body, "feedback");
          actor = field(body, "actor");
        } catch (const Error& e) {
          // Malformed attempts are audited too; they never reach the archive.
          json entry = {{"action", "decision"}, {"target", id}, {"outcome", "refused"}, {"error", e.kind()}};
          submit([entry](Orchestrator& o) { o.audit(entry); return 0; });
          throw;
        }
        auto receipt = submit([&](Orchestrator& o) { return o.decide(id, action, feedback, actor); });
        send(res, 200, {{"decision", receipt.decision}, {"status", to_string(receipt.status)},
                        {"project", receipt.project ? json(*receipt.project) : json(nullptr)}});
      });
    });
    server.Post(R"(/api/export/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        json body;
        try {
          body = parse_body(req);
        } catch (const Error&) {
          body = json::object();  // no readable token is still a gate refusal
        }
        const auto token = body.value("approve_token", json()).is_string() ? body["approve_token"].get<std::string>()
                                                                          : std::string();
        const auto actor = body.value("actor", json()).is_string() ? body["actor"].get<std::string>() : std::string();
        auto receipt = submit([&](Orchestrator& o) { return o.export_titles({id}, token, actor); });
        send(res, 200, {{"titles", receipt.titles}, {"file", receipt.file}, {"csv", receipt.csv},
                        {"approval", {{"actor", receipt.approval.actor}, {"timestamp", receipt.approval.timestamp}}}});
      });
    });
  }

  void bind(const std::string& host, int port) {
    routes();
    // httplib's default SO_REUSEPORT would let a second service share the port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("startup", "cannot bind " + host + ":" + std::to_string(port));
    this->port = bound;
  }

  Orchestrator orch;
  httplib::Server server;
  std::thread listener;
  std::thread writer;
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::function<void()>> queue;
  bool closing = false;
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const State> snapshot;
  int port = 0;
};

Service::Service(Orchestrator orchestrator) : impl_(std::make_unique<Impl>(std::move(orchestrator))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  impl_->bind(host, port);
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void Service::run(const std::string& host, int port) {
  impl_->bind(host, port);
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->stop(); }

std::shared_ptr<const State> Service::state() const { return impl_->read(); }

}  // namespace imprint::orchestrator
