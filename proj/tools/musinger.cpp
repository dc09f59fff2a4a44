// musinger: play, stream, trial, analyze, kinematics.
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "musinger/bridge/server.hpp"
#include "musinger/core/clock.hpp"
#include "musinger/core/error.hpp"
#include "musinger/core/rng.hpp"
#include "musinger/display/kinematics.hpp"
#include "musinger/experiment/experiment.hpp"
#include "musinger/melody/melody.hpp"
#include "musinger/pipeline/config.hpp"
#include "musinger/pipeline/live_input.hpp"
#include "musinger/pipeline/simulate.hpp"
#include "musinger/pipeline/stream.hpp"
#include "musinger/pipeline/udp.hpp"

using namespace musinger;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNetwork = 3;
constexpr int kExitNoUi = 4;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct Transport {
  bool loopback = false;
  double loss = 0.0;
  double jitter_ms = 0.0;
  double dup = 0.0;
  std::string listen;
  std::string connect;
  std::string out;
  bool json = false;
  int ui_port = -1;

  wire::LinkFaults faults() const {
    wire::LinkFaults f;
    f.loss = loss;
    f.jitter_ms = jitter_ms;
    f.duplication = dup;
    return f;
  }
};

void add_transport_flags(CLI::App* cmd, Transport& t, bool network) {
  cmd->add_flag("--loopback", t.loopback, "Use the in-process link");
  cmd->add_option("--loss", t.loss, "Loopback datagram loss probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--jitter", t.jitter_ms, "Loopback delay jitter in ms")->check(CLI::NonNegativeNumber);
  cmd->add_option("--dup", t.dup, "Loopback duplication probability")->check(CLI::Range(0.0, 1.0));
  if (network) {
    cmd->add_option("--connect", t.connect, "Send to ADDR:PORT");
  }
  cmd->add_option("--out", t.out, "Output file");
  cmd->add_flag("--json", t.json, "Machine-readable summary on stdout");
  cmd->add_option("--ui-port", t.ui_port, "Serve the browser console on this port")->check(CLI::Range(0, 65535));
}

pipeline::SystemConfig load_system_config(const Common& common) {
  const auto path = pipeline::resolve_config_path(
      common.config_path.empty() ? std::nullopt : std::optional<std::string>(common.config_path));
  if (!path) return {};
  return pipeline::load_config(*path);
}

void log_line(const Common& common, const std::string& message) {
  if (common.verbose) std::cerr << message << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::Io, "error writing " + path);
}

RhythmPattern load_pattern(const std::string& melody, const std::string& file) {
  if (!file.empty()) {
    try {
      return melody::parse_rhythm_file(read_file(file));
    } catch (const Error& e) {
      throw Error(e.code(), file + ": " + e.what(), e.line());
    }
  }
  if (melody.size() != 1 || !melody_from_letter(melody[0]))
    throw Error(Errc::InvalidInput, "--melody must be one of A, B, C, D");
  RhythmPattern p = melody::builtin_melody(*melody_from_letter(melody[0]));
  return p;
}

std::string classification_text(const RhythmPattern& perceived) {
  try {
    const auto id = melody::classify_melody(perceived);
    return std::string(1, melody_letter(id)) + " (" + std::string(melody_title(id)) + ")";
  } catch (const Error&) {
    return "none (too few onsets)";
  }
}

std::optional<char> classification_letter(const RhythmPattern& perceived) {
  try {
    return melody_letter(melody::classify_melody(perceived));
  } catch (const Error&) {
    return std::nullopt;
  }
}

nlohmann::json stats_json(const pipeline::StreamStats& s) {
  return {{"frames_sent", s.frames_sent},   {"datagrams_received", s.datagrams_received},
          {"malformed", s.malformed},       {"ticks", s.ticks},
          {"played", s.jitter.played},      {"concealed", s.jitter.held},
          {"silence", s.jitter.silence},    {"late", s.jitter.late},
          {"duplicates", s.jitter.duplicates}, {"overflow", s.jitter.overflow},
          {"skipped", s.jitter.skipped}};
}

void print_stats(const pipeline::StreamStats& s) {
  std::cout << "datagrams received " << s.datagrams_received << ", malformed " << s.malformed << '\n'
            << "frames played " << s.jitter.played << ", concealed gaps (held) " << s.jitter.held << ", silence "
            << s.jitter.silence << ", late " << s.jitter.late << ", duplicates " << s.jitter.duplicates
            << ", skipped " << s.jitter.skipped << '\n';
}

void write_history(const std::string& path, const display::StateHistory& history) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  history.write_csv(out);
}

/// Starts the console when a port was requested. Missing assets map to exit 4.
std::unique_ptr<bridge::BridgeServer> start_console(const Transport& t, const Common& common) {
  if (t.ui_port < 0) return nullptr;
  auto server = std::make_unique<bridge::BridgeServer>(bridge::default_ui_dir());
  server->on_log([&common](const std::string& m) { log_line(common, m); });
  const auto port = server->start("0.0.0.0", t.ui_port);
  std::cerr << "console at http://localhost:" << port << "/\n";
  return server;
}

struct UiMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::unique_ptr<bridge::BridgeServer> start_console_or_fail(const Transport& t, const Common& common) {
  try {
    return start_console(t, common);
  } catch (const Error& e) {
    if (e.code() == Errc::Io) throw UiMissing(e.what());
    throw;
  }
}

pipeline::StateObserver console_observer(bridge::BridgeServer* server, double tick_rate_hz, bool pace) {
  if (!server) return {};
  const auto begin = monotonic_now();
  return [server, tick_rate_hz, pace, begin](std::uint64_t tick, const display::DisplayState& state) {
    server->broadcast(bridge::state_message(tick, state));
    if (pace) {
      const auto due = begin + static_cast<std::uint64_t>(static_cast<double>(tick + 1) * 1e6 / tick_rate_hz);
      const auto now = monotonic_now();
      if (due > now) std::this_thread::sleep_for(std::chrono::microseconds(due - now));
    }
  };
}

// ---- play -------------------------------------------------------------------

struct PlayArgs {
  std::string melody;
  std::string file;
  Transport t;
};

int cmd_play(const PlayArgs& a, const Common& common) {
  const auto cfg = load_system_config(common);
  RhythmPattern pattern = load_pattern(a.melody, a.file);

  if (!a.t.connect.empty()) {
    const auto ep = pipeline::parse_endpoint(a.t.connect);
    pipeline::UdpSender sender(ep);
    const auto frames = recorder::encode_pattern(pattern, cfg.sensor, monotonic_now());
    const auto sent = pipeline::send_paced(frames, sender, &g_stop);
    sender.check_refused(100);
    if (a.t.json)
      std::cout << nlohmann::json{{"frames_sent", sent}, {"to", a.t.connect}}.dump(2) << '\n';
    else
      std::cout << "sent " << sent << " frames to " << a.t.connect << '\n';
    return kExitOk;
  }

  auto console = start_console_or_fail(a.t, common);
  pipeline::PlaybackOptions options;
  options.config = cfg;
  options.faults = a.t.faults();
  options.seed = SeedTree(common.seed).derive("link");
  options.observer = console_observer(console.get(), cfg.display.tick_rate_hz, true);
  const auto result = pipeline::simulate_playback(pattern, options);
  if (!a.t.out.empty()) write_history(a.t.out, result.history);

  if (a.t.json) {
    nlohmann::json j;
    j["source_onsets"] = pattern.onsets.size();
    j["perceived_onsets"] = result.perceived.onsets.size();
    const auto letter = classification_letter(result.perceived);
    j["classified_as"] = letter ? nlohmann::json(std::string(1, *letter)) : nlohmann::json(nullptr);
    j["stats"] = stats_json(result.stats);
    if (!a.t.out.empty()) j["history"] = a.t.out;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "pattern: " << pattern.onsets.size() << " onsets, " << result.stats.frames_sent << " frames sent\n";
    print_stats(result.stats);
    std::cout << "perceived " << result.perceived.onsets.size() << " onsets, classified as "
              << classification_text(result.perceived) << '\n';
    if (!a.t.out.empty()) std::cout << "state history written to " << a.t.out << '\n';
  }
  return kExitOk;
}

// ---- stream -------------------------------------------------------------------

struct StreamArgs {
  std::string melody;
  std::string file;
  double hold_ms = 120.0;
  double timeout_s = 0.0;
  Transport t;
};

void report_stream(const pipeline::ReceiveResult& r, const Transport& t) {
  if (!t.out.empty()) write_history(t.out, r.history);
  if (t.json) {
    nlohmann::json j;
    j["completed"] = r.completed;
    j["perceived_onsets"] = r.perceived.onsets.size();
    const auto letter = classification_letter(r.perceived);
    j["classified_as"] = letter ? nlohmann::json(std::string(1, *letter)) : nlohmann::json(nullptr);
    j["stats"] = stats_json(r.stats);
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << (r.completed ? "stream complete\n" : "stream stopped before its end\n");
  print_stats(r.stats);
  std::cout << "perceived " << r.perceived.onsets.size() << " onsets, classified as "
            << classification_text(r.perceived) << '\n';
  if (!t.out.empty()) std::cout << "state history written to " << t.out << '\n';
}

std::uint64_t run_stream_sender(const StreamArgs& a, const pipeline::SystemConfig& cfg, pipeline::DatagramSink& sink,
                                bridge::BridgeServer* console) {
  if (!a.file.empty() || !a.melody.empty()) {
    const auto pattern = load_pattern(a.melody, a.file);
    const auto frames = recorder::encode_pattern(pattern, cfg.sensor, monotonic_now());
    return pipeline::send_paced(frames, sink, &g_stop);
  }
  pipeline::LiveSender live(cfg.sensor, sink);
  if (console)
    console->on_message([&live](const bridge::BridgeMessage& m) {
      if (const auto* tap = std::get_if<bridge::TapMessage>(&m)) live.submit(bridge::to_tap_event(*tap, monotonic_now()));
    });
  const bool keys = console == nullptr || ::isatty(STDIN_FILENO);
  if (keys) std::cerr << "tap with j / k / l, q to finish\n";
  pipeline::TerminalRawMode raw;
  const auto sent = live.run(keys ? STDIN_FILENO : -1, a.hold_ms, &g_stop);
  if (console) console->on_message({});
  return sent;
}

int cmd_stream(const StreamArgs& a, const Common& common) {
  const auto cfg = load_system_config(common);
  const int roles = (!a.t.listen.empty()) + (!a.t.connect.empty()) + (a.t.loopback ? 1 : 0);
  if (roles != 1) throw Error(Errc::InvalidInput, "stream needs exactly one of --listen, --connect, --loopback");
  if (!a.file.empty() && !a.melody.empty()) throw Error(Errc::InvalidInput, "give either --melody or --file");
  if (!a.file.empty() || !a.melody.empty()) (void)load_pattern(a.melody, a.file);

  pipeline::ReceiverOptions ro;
  ro.config = cfg;
  ro.faults = a.t.faults();
  ro.seed = SeedTree(common.seed).derive("link");
  ro.stop = &g_stop;
  ro.first_frame_timeout_s = a.timeout_s;

  if (!a.t.listen.empty()) {
    pipeline::UdpReceiver receiver(pipeline::parse_endpoint(a.t.listen));
    auto console = start_console_or_fail(a.t, common);
    ro.observer = console_observer(console.get(), cfg.display.tick_rate_hz, false);
    std::cerr << "listening on port " << receiver.port() << '\n';
    report_stream(pipeline::run_receiver(receiver, ro), a.t);
    return kExitOk;
  }
  if (!a.t.connect.empty()) {
    pipeline::UdpSender sender(pipeline::parse_endpoint(a.t.connect));
    auto console = start_console_or_fail(a.t, common);
    const auto sent = run_stream_sender(a, cfg, sender, console.get());
    sender.check_refused(100);
    if (a.t.json)
      std::cout << nlohmann::json{{"frames_sent", sent}}.dump(2) << '\n';
    else
      std::cout << "sent " << sent << " frames\n";
    return kExitOk;
  }

  pipeline::LocalChannel channel;
  auto console = start_console_or_fail(a.t, common);
  ro.observer = console_observer(console.get(), cfg.display.tick_rate_hz, false);
  std::uint64_t sent = 0;
  std::exception_ptr sender_error;
  std::thread producer([&] {
    try {
      sent = run_stream_sender(a, cfg, channel, console.get());
    } catch (...) {
      sender_error = std::current_exception();
      g_stop = true;
    }
  });
  auto result = pipeline::run_receiver(channel, ro);
  g_stop = true;
  producer.join();
  if (sender_error) std::rethrow_exception(sender_error);
  result.stats.frames_sent = sent;
  report_stream(result, a.t);
  return kExitOk;
}

// ---- trial ----------------------------------------------------------------------

struct TrialArgs {
  std::string participant = "P1";
  std::string condition = "none";
  std::string answers = "machine";
  int reps = 3;
  double answer_timeout_s = 120.0;
  Transport t;
};

/// Answers arriving from the browser console, one per prompt.
class ConsoleAnswers {
 public:
  explicit ConsoleAnswers(bridge::BridgeServer& server) : server_(server) {
    server_.on_message([this](const bridge::BridgeMessage& m) {
      const auto* answer = std::get_if<bridge::AnswerMessage>(&m);
      if (!answer) return;
      std::lock_guard lock(mutex_);
      if (waiting_ && !answer_) {
        answer_ = answer->melody;
        cv_.notify_all();
      }
    });
  }
  ~ConsoleAnswers() { server_.on_message({}); }

  std::optional<MelodyId> ask(int trial_index, double timeout_s) {
    {
      std::lock_guard lock(mutex_);
      answer_.reset();
      waiting_ = true;
    }
    server_.broadcast(bridge::PromptMessage{trial_index});
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, std::chrono::duration<double>(timeout_s), [&] { return answer_.has_value() || g_stop.load(); });
    waiting_ = false;
    return answer_;
  }

 private:
  bridge::BridgeServer& server_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool waiting_ = false;
  std::optional<MelodyId> answer_;
};

std::optional<MelodyId> ask_stdin(const experiment::Prompt& prompt) {
  for (;;) {
    std::cout << "trial " << prompt.trial_index + 1 << ": which melody? ";
    for (MelodyId id : kAllMelodies) std::cout << melody_letter(id) << "=" << melody_title(id) << "  ";
    std::cout << std::endl;
    std::string line;
    if (!std::getline(std::cin, line)) return std::nullopt;
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos) {
      const char c = line[first];
      if (const auto id = melody_from_letter(c)) return id;
    }
    std::cout << "please answer A, B, C or D\n";
  }
}

int cmd_trial(const TrialArgs& a, const Common& common) {
  const auto cfg = load_system_config(common);
  const auto condition = condition_from_label(a.condition);
  if (!condition) throw Error(Errc::InvalidInput, "--condition must be none or white");
  if (a.participant.empty() || a.participant.find_first_of(",\n") != std::string::npos)
    throw Error(Errc::InvalidInput, "--participant must be non-empty and free of commas");
  const std::string log_path = a.t.out.empty() ? "trials.csv" : a.t.out;

  bool need_header = true;
  if (std::filesystem::exists(log_path) && std::filesystem::file_size(log_path) > 0) {
    std::ifstream in(log_path);
    std::string first;
    std::getline(in, first);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first != experiment::kTrialLogHeader)
      throw Error(Errc::BadFormat, log_path + ": existing file is not a trial log", 1);
    need_header = false;
  }

  std::unique_ptr<bridge::BridgeServer> console;
  std::unique_ptr<ConsoleAnswers> console_answers;
  if (a.answers == "ui") {
    if (a.t.ui_port < 0) throw UiMissing("--answers ui needs --ui-port");
    console = start_console_or_fail(a.t, common);
    console_answers = std::make_unique<ConsoleAnswers>(*console);
  } else if (a.t.ui_port >= 0) {
    console = start_console_or_fail(a.t, common);
  }

  const SeedTree seeds(common.seed);
  const auto plan = experiment::build_session_plan(kAllMelodies, a.reps, seeds.derive("plan"));
  int presented = 0;
  experiment::Presenter presenter = [&](const RhythmPattern& stimulus) {
    pipeline::PlaybackOptions o;
    o.config = cfg;
    o.faults = a.t.faults();
    o.seed = seeds.derive("link", static_cast<std::uint64_t>(presented++));
    o.observer = console_observer(console.get(), cfg.display.tick_rate_hz, console_answers != nullptr);
    return pipeline::simulate_playback(stimulus, o).perceived;
  };
  experiment::AnswerSource answers;
  if (a.answers == "machine") {
    answers = [](const experiment::Prompt& p) -> std::optional<MelodyId> {
      try {
        return melody::classify_melody(p.perceived);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
  } else if (a.answers == "stdin") {
    answers = ask_stdin;
  } else {
    answers = [&](const experiment::Prompt& p) { return console_answers->ask(p.trial_index, a.answer_timeout_s); };
  }

  experiment::SessionOptions so;
  so.participant = a.participant;
  so.condition = *condition;
  so.log = [](const std::string& m) { std::cerr << m << '\n'; };
  const auto records = experiment::run_session(plan, so, presenter, answers);

  std::ofstream out(log_path, std::ios::app);
  if (!out) throw Error(Errc::Io, "cannot write " + log_path);
  experiment::write_trial_log(out, records, need_header);
  out.close();

  const auto correct = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct(); });
  if (a.t.json) {
    std::cout << nlohmann::json{{"participant", a.participant},
                                {"condition", std::string(condition_label(*condition))},
                                {"trials", records.size()},
                                {"correct", correct},
                                {"log", log_path}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << records.size() << " trials for " << a.participant << " (" << condition_label(*condition) << "), "
              << correct << " correct, appended to " << log_path << '\n';
  }
  return kExitOk;
}

// ---- analyze ----------------------------------------------------------------------

struct AnalyzeArgs {
  std::string log;
  std::string out;
  bool json = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
  std::ifstream in(a.log);
  if (!in) throw Error(Errc::Io, "cannot read " + a.log);
  std::vector<experiment::TrialRecord> records;
  try {
    records = experiment::read_trial_log(in);
  } catch (const Error& e) {
    throw Error(e.code(), a.log + ": " + e.what(), e.line());
  }
  if (records.empty()) throw Error(Errc::EmptyData, a.log + ": trial log has no records");
  const auto report = experiment::analyze(records);
  std::string text;
  if (a.json) {
    text = experiment::json_report(report) + "\n";
  } else {
    std::ostringstream os;
    experiment::write_text_report(os, report);
    text = os.str();
  }
  std::cout << text;
  if (!a.out.empty()) write_file(a.out, text);
  return kExitOk;
}

// ---- kinematics ----------------------------------------------------------------------

struct KinematicsArgs {
  std::vector<double> fk;
  std::vector<double> ik;
  bool workspace = false;
  double step = 1.0;
  int linkage = 1;
  std::optional<double> base_separation, proximal, distal, angle_min_deg, angle_max_deg;
  std::string out;
};

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_kinematics(const KinematicsArgs& a, const Common& common) {
  const auto cfg = load_system_config(common);
  display::LinkageGeometry g = cfg.display.linkages[static_cast<std::size_t>(a.linkage - 1)];
  if (a.base_separation) g.base_separation_mm = *a.base_separation;
  if (a.proximal) g.proximal_length_mm = *a.proximal;
  if (a.distal) g.distal_length_mm = *a.distal;
  if (a.angle_min_deg) g.angle_min_rad = display::deg_to_rad(*a.angle_min_deg);
  if (a.angle_max_deg) g.angle_max_rad = display::deg_to_rad(*a.angle_max_deg);
  g.validate();

  const int queries = (!a.fk.empty()) + (!a.ik.empty()) + (a.workspace ? 1 : 0);
  if (queries != 1) throw Error(Errc::InvalidInput, "kinematics needs exactly one of --fk, --ik, --workspace");

  if (!a.fk.empty()) {
    const double t1 = display::deg_to_rad(a.fk[0]);
    const double t2 = display::deg_to_rad(a.fk[1]);
    const auto p = display::try_forward_kinematics(g, t1, t2);
    if (!p || !g.within_limits(t1) || !g.within_limits(t2)) {
      std::cout << "unreachable" << (p ? " (angles outside limits)" : " (singular configuration)") << '\n';
      return kExitOk;
    }
    std::cout << fixed3(p->x_mm) << ' ' << fixed3(p->y_mm) << '\n';
    return kExitOk;
  }
  if (!a.ik.empty()) {
    try {
      const auto q = display::inverse_kinematics(g, {a.ik[0], a.ik[1]});
      std::cout << fixed3(display::rad_to_deg(q.theta1_rad)) << ' ' << fixed3(display::rad_to_deg(q.theta2_rad))
                << '\n';
    } catch (const display::UnreachableError& e) {
      std::cout << "unreachable; nearest reachable point " << fixed3(e.nearest().x_mm) << ' '
                << fixed3(e.nearest().y_mm) << '\n';
    }
    return kExitOk;
  }

  if (!(a.step > 0.0)) throw Error(Errc::InvalidInput, "--step must be positive");
  const double reach = g.proximal_length_mm + g.distal_length_mm;
  const double x0 = -reach, x1 = g.base_separation_mm + reach, y0 = -reach, y1 = reach;
  const auto nx = static_cast<long>(std::floor((x1 - x0) / a.step + 1e-9)) + 1;
  const auto ny = static_cast<long>(std::floor((y1 - y0) / a.step + 1e-9)) + 1;
  if (static_cast<double>(nx) * static_cast<double>(ny) > 5e7) throw Error(Errc::InvalidInput, "--step too small");
  std::ostringstream os;
  os << "x_mm,y_mm,reachable\n";
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i) {
      const double x = x0 + static_cast<double>(i) * a.step;
      const double y = y0 + static_cast<double>(j) * a.step;
      os << fixed3(x) << ',' << fixed3(y) << ',' << (display::workspace_contains(g, {x, y}) ? 1 : 0) << '\n';
    }
  if (a.out.empty())
    std::cout << os.str();
  else
    write_file(a.out, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Tap, stream and render rhythms on a simulated three-linkage haptic display"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "Key-value config file (default $MUSINGER_CONFIG)");
  app.add_option("--seed", common.seed, "Root seed for every random stream");
  app.add_flag("-v,--verbose", common.verbose, "Diagnostics on stderr");

  PlayArgs play;
  auto* play_cmd = app.add_subcommand("play", "Stream a melody through the pipeline and render it");
  auto* melody_opt = play_cmd->add_option("--melody", play.melody, "Built-in melody A-D");
  auto* file_opt = play_cmd->add_option("--file", play.file, "Rhythm file (MRF1)");
  melody_opt->excludes(file_opt);
  add_transport_flags(play_cmd, play.t, true);

  StreamArgs stream;
  auto* stream_cmd = app.add_subcommand("stream", "Live streaming between a recorder and a display");
  stream_cmd->add_option("--listen", stream.t.listen, "Run the display side on ADDR:PORT");
  auto* s_melody = stream_cmd->add_option("--melody", stream.melody, "Send a built-in melody instead of live taps");
  auto* s_file = stream_cmd->add_option("--file", stream.file, "Send a rhythm file instead of live taps");
  s_melody->excludes(s_file);
  stream_cmd->add_option("--hold-ms", stream.hold_ms, "Auto-release delay for key taps")->check(CLI::PositiveNumber);
  stream_cmd->add_option("--timeout", stream.timeout_s, "Listener gives up after this many seconds without a frame")
      ->check(CLI::NonNegativeNumber);
  add_transport_flags(stream_cmd, stream.t, true);

  TrialArgs trial;
  auto* trial_cmd = app.add_subcommand("trial", "Run one blind recognition session and append it to a trial log");
  trial_cmd->add_option("--participant", trial.participant, "Participant identifier");
  trial_cmd->add_option("--condition", trial.condition, "none or white")->check(CLI::IsMember({"none", "white"}));
  trial_cmd->add_option("--answers", trial.answers, "machine, stdin or ui")
      ->check(CLI::IsMember({"machine", "stdin", "ui"}));
  trial_cmd->add_option("--reps", trial.reps, "Presentations per melody")->check(CLI::Range(1, 100));
  trial_cmd->add_option("--answer-timeout", trial.answer_timeout_s, "Seconds to wait for a console answer")
      ->check(CLI::PositiveNumber);
  add_transport_flags(trial_cmd, trial.t, false);

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Confusion matrices, accuracy and ANOVA for a trial log");
  analyze_cmd->add_option("log", analyze.log, "Trial log CSV")->required();
  analyze_cmd->add_option("--out", analyze.out, "Also write the report here");
  analyze_cmd->add_flag("--json", analyze.json, "JSON report");

  KinematicsArgs kin;
  auto* kin_cmd = app.add_subcommand("kinematics", "Forward/inverse kinematics and workspace maps");
  kin_cmd->add_option("--fk", kin.fk, "THETA1 THETA2 in degrees")->expected(2);
  kin_cmd->add_option("--ik", kin.ik, "X Y in millimetres")->expected(2);
  kin_cmd->add_flag("--workspace", kin.workspace, "Reachability grid as CSV");
  kin_cmd->add_option("--step", kin.step, "Workspace grid spacing in mm");
  kin_cmd->add_option("--linkage", kin.linkage, "Linkage 1-3 from the config")->check(CLI::Range(1, 3));
  kin_cmd->add_option("--base-separation", kin.base_separation, "d in mm");
  kin_cmd->add_option("--proximal", kin.proximal, "L1 in mm");
  kin_cmd->add_option("--distal", kin.distal, "L2 in mm");
  kin_cmd->add_option("--angle-min", kin.angle_min_deg, "Lower motor limit in degrees");
  kin_cmd->add_option("--angle-max", kin.angle_max_deg, "Upper motor limit in degrees");
  kin_cmd->add_option("--out", kin.out, "Write the workspace CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*play_cmd) {
      if (play.melody.empty() == play.file.empty()) throw Error(Errc::InvalidInput, "play needs --melody or --file");
      return cmd_play(play, common);
    }
    if (*stream_cmd) return cmd_stream(stream, common);
    if (*trial_cmd) return cmd_trial(trial, common);
    if (*analyze_cmd) return cmd_analyze(analyze);
    if (*kin_cmd) return cmd_kinematics(kin, common);
  } catch (const UiMissing& e) {
    std::cerr << "musinger: console unavailable: " << e.what() << '\n';
    return kExitNoUi;
  } catch (const Error& e) {
    std::cerr << "musinger: " << e.what() << '\n';
    return e.code() == Errc::Network ? kExitNetwork : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "musinger: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
