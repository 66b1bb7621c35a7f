#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <string_view>

namespace zosd {

/// Set of lowercase, trimmed function words excluded from candidate labels.
class StopList {
 public:
  StopList() = default;
  /// Entries are trimmed and lowercased on insertion; empty entries are ignored.
  StopList(std::initializer_list<std::string_view> words);
  template <typename Range>
  explicit StopList(const Range& words) {
    for (const auto& w : words) insert(w);
  }

  /// Built-in English list (version kEnglishVersion).
  static const StopList& english();
  static constexpr int kEnglishVersion = 1;

  void insert(std::string_view word);
  /// Case-insensitive membership.
  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }
  const std::set<std::string, std::less<>>& words() const noexcept { return words_; }

 private:
  std::set<std::string, std::less<>> words_;
};

}  // namespace zosd
