#include "musinger/bridge/messages.hpp"

#include "json.hpp"
#include "musinger/core/error.hpp"

namespace musinger::bridge {

using nlohmann::json;

namespace {

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw Error(Errc::BadFormat, std::string("bridge message lacks \"") + name + "\"");
  return j.at(name);
}

double number(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) throw Error(Errc::BadFormat, std::string("\"") + name + "\" must be a number");
  return v.get<double>();
}

std::uint64_t unsigned_number(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_unsigned()) throw Error(Errc::BadFormat, std::string("\"") + name + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

StateMessage state_message(std::uint64_t tick, const display::DisplayState& state) {
  StateMessage m;
  m.tick = tick;
  for (std::size_t i = 0; i < state.size(); ++i)
    m.linkages[i] = {state[i].effector_mm.x_mm, state[i].effector_mm.y_mm, state[i].in_contact,
                     state[i].contact_depth_mm};
  return m;
}

recorder::TapEvent to_tap_event(const TapMessage& m, std::uint64_t timestamp_us) {
  return {m.channel, m.kind, m.kind == recorder::TapKind::Press ? m.force_n : 0.0, timestamp_us};
}

std::string to_json(const BridgeMessage& message) {
  const json j = std::visit(
      Overloaded{
          [](const TapMessage& m) {
            return json{{"type", "tap"},
                        {"channel", m.channel},
                        {"kind", m.kind == recorder::TapKind::Press ? "Press" : "Release"},
                        {"force_n", m.force_n},
                        {"t_us", m.t_us}};
          },
          [](const StateMessage& m) {
            json links = json::array();
            for (const auto& l : m.linkages)
              links.push_back(
                  {{"x_mm", l.x_mm}, {"y_mm", l.y_mm}, {"in_contact", l.in_contact}, {"depth_mm", l.depth_mm}});
            return json{{"type", "state"}, {"tick", m.tick}, {"linkages", links}};
          },
          [](const PromptMessage& m) { return json{{"type", "prompt"}, {"trial_index", m.trial_index}}; },
          [](const AnswerMessage& m) {
            return json{{"type", "answer"}, {"melody", std::string(1, melody_letter(m.melody))}};
          },
      },
      message);
  return j.dump();
}

std::optional<BridgeMessage> parse_message(std::string_view text, std::string* warning) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::BadFormat, "bridge message is not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) {
    if (warning) *warning = "bridge message without a type ignored";
    return std::nullopt;
  }
  const auto type = j["type"].get<std::string>();
  if (type == "tap") {
    TapMessage m;
    const double ch = number(j, "channel");
    if (ch != 1.0 && ch != 2.0 && ch != 3.0) throw Error(Errc::BadFormat, "tap channel must be 1..3");
    m.channel = static_cast<int>(ch);
    const auto& kind = field(j, "kind");
    if (kind == "Press")
      m.kind = recorder::TapKind::Press;
    else if (kind == "Release")
      m.kind = recorder::TapKind::Release;
    else
      throw Error(Errc::BadFormat, "tap kind must be Press or Release");
    m.force_n = number(j, "force_n");
    if (!(m.force_n >= 0.0 && m.force_n <= kFullScaleN)) throw Error(Errc::BadFormat, "tap force_n outside [0, 10]");
    m.t_us = unsigned_number(j, "t_us");
    return m;
  }
  if (type == "state") {
    StateMessage m;
    m.tick = unsigned_number(j, "tick");
    const auto& links = field(j, "linkages");
    if (!links.is_array() || links.size() != kChannels)
      throw Error(Errc::BadFormat, "state needs exactly 3 linkages");
    for (std::size_t i = 0; i < kChannels; ++i) {
      const auto& l = links[i];
      if (!l.is_object()) throw Error(Errc::BadFormat, "linkage entry must be an object");
      const auto& contact = field(l, "in_contact");
      if (!contact.is_boolean()) throw Error(Errc::BadFormat, "in_contact must be a boolean");
      m.linkages[i] = {number(l, "x_mm"), number(l, "y_mm"), contact.get<bool>(), number(l, "depth_mm")};
    }
    return m;
  }
  if (type == "prompt") {
    const auto idx = unsigned_number(j, "trial_index");
    return PromptMessage{static_cast<int>(idx)};
  }
  if (type == "answer") {
    const auto& mel = field(j, "melody");
    if (!mel.is_string() || mel.get<std::string>().size() != 1)
      throw Error(Errc::BadFormat, "answer melody must be one of A-D");
    const char c = mel.get<std::string>()[0];
    const auto id = melody_from_letter(c);
    if (!id || c < 'A' || c > 'D') throw Error(Errc::BadFormat, "answer melody must be one of A-D");
    return AnswerMessage{*id};
  }
  if (warning) *warning = "unknown bridge message type \"" + type + "\" ignored";
  return std::nullopt;
}

}  // namespace musinger::bridge
