#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace zosd {

struct SplitImage {
  std::string id;
  std::string class_name;

  friend bool operator==(const SplitImage&, const SplitImage&) = default;
};

/// One benchmark split: seen classes (whose names are given at inference),
/// unseen classes and the test pool.
struct SplitSpec {
  std::string name;
  std::vector<std::string> seen_classes;
  std::vector<std::string> unseen_classes;
  std::vector<SplitImage> images;

  /// Throws InvalidSplit: empty class lists, seen/unseen overlap
  /// (case-insensitive), duplicate image ids, or an image of an unknown class.
  void validate() const;
  bool is_unseen_class(std::string_view class_name) const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

}  // namespace zosd
