#include "polyfuse/fusion/modality.hpp"

#include <bit>

#include "polyfuse/core/error.hpp"

namespace polyfuse {

char code(Modality m) noexcept {
  switch (m) {
    case Modality::audio: return 'A';
    case Modality::visual: return 'V';
    case Modality::text: return 'T';
  }
  return '?';
}

std::string_view name(Modality m) noexcept {
  switch (m) {
    case Modality::audio: return "audio";
    case Modality::visual: return "visual";
    case Modality::text: return "text";
  }
  return "";
}

Modality parse_modality(std::string_view s) {
  if (s == "A" || s == "a" || s == "audio") return Modality::audio;
  if (s == "V" || s == "v" || s == "visual") return Modality::visual;
  if (s == "T" || s == "t" || s == "text") return Modality::text;
  throw Error(ErrorCode::ConfigError, "unknown modality '" + std::string(s) + "'");
}

ModalitySet::ModalitySet(std::initializer_list<Modality> members) {
  for (Modality m : members) bits_ |= static_cast<std::uint8_t>(1u << static_cast<int>(m));
}

ModalitySet ModalitySet::parse(std::string_view text) {
  ModalitySet set;
  for (char c : text) {
    if (c == '+' || c == ' ') continue;
    const Modality m = parse_modality(std::string_view(&c, 1));
    set.bits_ |= static_cast<std::uint8_t>(1u << static_cast<int>(m));
  }
  if (set.empty()) throw Error(ErrorCode::ConfigError, "empty modality set '" + std::string(text) + "'");
  return set;
}

std::vector<Modality> ModalitySet::members() const {
  std::vector<Modality> out;
  for (Modality m : kAllModalities)
    if (contains(m)) out.push_back(m);
  return out;
}

std::size_t ModalitySet::size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

std::string ModalitySet::to_string() const {
  std::string out;
  for (Modality m : members()) {
    if (!out.empty()) out += '+';
    out += code(m);
  }
  return out;
}

const std::vector<ModalitySet>& table_order() {
  using M = Modality;
  static const std::vector<ModalitySet> order = {
      {M::audio, M::visual}, {M::visual, M::text}, {M::audio, M::text}, {M::audio, M::visual, M::text},
      {M::text},             {M::audio},           {M::visual}};
  return order;
}

}  // namespace polyfuse
