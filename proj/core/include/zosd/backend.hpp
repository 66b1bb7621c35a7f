#pragma once

#include <optional>
#include <string_view>

#include "zosd/core.hpp"

namespace zosd {

/// Source of unit-norm image and prompt embeddings. Implementations must be
/// deterministic and safe for concurrent const calls.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual std::optional<EmbeddingVector> find_image(std::string_view image_id) const = 0;
  /// Text embeddings are keyed by the full rendered prompt, not the bare label.
  virtual std::optional<EmbeddingVector> find_text(std::string_view prompt) const = 0;

  /// Throws MissingImage.
  EmbeddingVector embed_image(std::string_view image_id) const;
  /// Throws MissingTextEmbedding.
  EmbeddingVector embed_text(std::string_view prompt) const;
};

}  // namespace zosd
