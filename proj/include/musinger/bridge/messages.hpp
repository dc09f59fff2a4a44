#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "musinger/core/types.hpp"
#include "musinger/display/display.hpp"
#include "musinger/recorder/sensor.hpp"

namespace musinger::bridge {

// JSON messages exchanged with the browser console:
//   {"type":"tap","channel":1..3,"kind":"Press"|"Release","force_n":N,"t_us":N}
//   {"type":"state","tick":N,"linkages":[{"x_mm","y_mm","in_contact","depth_mm"} x3]}
//   {"type":"prompt","trial_index":N}
//   {"type":"answer","melody":"A".."D"}

struct TapMessage {
  int channel = 1;
  recorder::TapKind kind = recorder::TapKind::Press;
  double force_n = 0.0;
  std::uint64_t t_us = 0;
  bool operator==(const TapMessage&) const = default;
};

struct LinkageView {
  double x_mm = 0.0;
  double y_mm = 0.0;
  bool in_contact = false;
  double depth_mm = 0.0;
  bool operator==(const LinkageView&) const = default;
};

struct StateMessage {
  std::uint64_t tick = 0;
  std::array<LinkageView, kChannels> linkages{};
  bool operator==(const StateMessage&) const = default;
};

struct PromptMessage {
  int trial_index = 0;
  bool operator==(const PromptMessage&) const = default;
};

struct AnswerMessage {
  MelodyId melody = MelodyId::A;
  bool operator==(const AnswerMessage&) const = default;
};

using BridgeMessage = std::variant<TapMessage, StateMessage, PromptMessage, AnswerMessage>;

StateMessage state_message(std::uint64_t tick, const display::DisplayState& state);
recorder::TapEvent to_tap_event(const TapMessage& m, std::uint64_t timestamp_us);

std::string to_json(const BridgeMessage& message);

/// Errc::BadFormat for invalid JSON or a known type with bad fields. An
/// unknown or missing type returns nullopt and, if given, fills `warning`.
std::optional<BridgeMessage> parse_message(std::string_view json, std::string* warning = nullptr);

}  // namespace musinger::bridge
