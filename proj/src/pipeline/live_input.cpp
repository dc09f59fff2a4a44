#include "musinger/pipeline/live_input.hpp"

#include <termios.h>
#include <unistd.h>

#include <cmath>
#include <cstring>

namespace musinger::pipeline {

KeyTapper::KeyTapper(double hold_ms, double force_n)
    : hold_us_(static_cast<std::uint64_t>(std::llround(hold_ms * 1000.0))), force_n_(force_n) {}

std::vector<recorder::TapEvent> KeyTapper::key(char c, std::uint64_t now_us) {
  int channel = 0;
  switch (c) {
    case 'j': case 'J': channel = 1; break;
    case 'k': case 'K': channel = 2; break;
    case 'l': case 'L': channel = 3; break;
    default: return {};
  }
  std::vector<recorder::TapEvent> out = expire(now_us);
  auto& slot = release_at_[static_cast<std::size_t>(channel - 1)];
  if (!slot) out.push_back({channel, recorder::TapKind::Press, force_n_, now_us});
  slot = now_us + hold_us_;
  return out;
}

std::vector<recorder::TapEvent> KeyTapper::expire(std::uint64_t now_us) {
  std::vector<recorder::TapEvent> out;
  for (int ch = 0; ch < kChannels; ++ch) {
    auto& slot = release_at_[static_cast<std::size_t>(ch)];
    if (slot && *slot <= now_us) {
      out.push_back({ch + 1, recorder::TapKind::Release, 0.0, *slot});
      slot.reset();
    }
  }
  return out;
}

std::vector<recorder::TapEvent> KeyTapper::release_all(std::uint64_t now_us) {
  std::vector<recorder::TapEvent> out;
  for (int ch = 0; ch < kChannels; ++ch) {
    auto& slot = release_at_[static_cast<std::size_t>(ch)];
    if (slot) out.push_back({ch + 1, recorder::TapKind::Release, 0.0, std::min(*slot, now_us)});
    slot.reset();
  }
  return out;
}

std::optional<std::uint64_t> KeyTapper::next_deadline() const {
  std::optional<std::uint64_t> best;
  for (const auto& slot : release_at_)
    if (slot && (!best || *slot < *best)) best = slot;
  return best;
}

static_assert(sizeof(termios) <= 64);

TerminalRawMode::TerminalRawMode() {
  if (!::isatty(STDIN_FILENO)) return;
  termios t{};
  if (::tcgetattr(STDIN_FILENO, &t) != 0) return;
  std::memcpy(saved_, &t, sizeof t);
  t.c_lflag &= static_cast<tcflag_t>(~(ICANON | ECHO));
  t.c_cc[VMIN] = 0;
  t.c_cc[VTIME] = 0;
  active_ = ::tcsetattr(STDIN_FILENO, TCSANOW, &t) == 0;
}

TerminalRawMode::~TerminalRawMode() {
  if (!active_) return;
  termios t{};
  std::memcpy(&t, saved_, sizeof t);
  ::tcsetattr(STDIN_FILENO, TCSANOW, &t);
}

}  // namespace musinger::pipeline
