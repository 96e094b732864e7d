#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace polyfuse {

enum class Modality : std::uint8_t { audio = 0, visual = 1, text = 2 };

inline constexpr Modality kAllModalities[] = {Modality::audio, Modality::visual, Modality::text};

char code(Modality m) noexcept;
std::string_view name(Modality m) noexcept;  // "audio", "visual", "text"
Modality parse_modality(std::string_view s);

/// Non-empty subset of {A, V, T}; iteration and rendering use the canonical
/// order A < V < T.
class ModalitySet {
 public:
  ModalitySet() = default;
  ModalitySet(std::initializer_list<Modality> members);

  /// Accepts "A+V+T", "T", "AVT", "V+A" (reordered canonically).
  static ModalitySet parse(std::string_view text);

  void insert(Modality m) noexcept { bits_ = static_cast<std::uint8_t>(bits_ | (1u << static_cast<int>(m))); }
  std::vector<Modality> members() const;
  bool contains(Modality m) const noexcept { return bits_ & (1u << static_cast<int>(m)); }
  std::size_t size() const noexcept;
  bool empty() const noexcept { return bits_ == 0; }
  bool is_singleton() const noexcept { return size() == 1; }
  std::string to_string() const;  // "A+V+T"
  std::uint8_t bits() const noexcept { return bits_; }

  auto operator<=>(const ModalitySet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

/// Row order of the fusion result tables: A+V, V+T, A+T, A+V+T, then T, A, V.
const std::vector<ModalitySet>& table_order();

}  // namespace polyfuse
