#pragma once

// Persistence formats:
//   embedding store  binary, little-endian:
//                    "ZOSDEMB1" | count:u32 | dim:u32 | count x (key_len:u32 | key | dim x f32)
//   candidate logits JSON Lines, one DecoderOutput per line
//   split file       JSON object {"name","seen","unseen","images":[{"id","class"}]}

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zosd/backend.hpp"
#include "zosd/candidates.hpp"
#include "zosd/core.hpp"
#include "zosd/split.hpp"

namespace zosd {

inline constexpr std::string_view kStoreMagic = "ZOSDEMB1";

/// Insertion-ordered map from key to unit-norm vector; all vectors share one dim.
class EmbeddingStore {
 public:
  struct Entry {
    std::string key;
    EmbeddingVector vector;
  };

  /// Throws DuplicateKey or DimMismatch.
  void insert(std::string key, EmbeddingVector vector);
  const EmbeddingVector* find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  /// 0 for an empty store.
  std::size_t dim() const noexcept { return entries_.empty() ? 0 : entries_.front().vector.dim(); }
  std::span<const Entry> entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string encode_store(const EmbeddingStore& store);
/// Throws BadMagic, TruncatedFile, MalformedFile, DuplicateKey or NormViolation.
EmbeddingStore decode_store(std::string_view bytes);

EmbeddingStore read_store(const std::filesystem::path& path);
void write_store(const EmbeddingStore& store, const std::filesystem::path& path);

/// Backend over two loaded stores: images keyed by id, prompts by rendered text.
class StoreBackend final : public EmbeddingBackend {
 public:
  /// Throws DimMismatch when both stores are non-empty and their dims differ.
  StoreBackend(EmbeddingStore images, EmbeddingStore text);

  std::optional<EmbeddingVector> find_image(std::string_view image_id) const override;
  std::optional<EmbeddingVector> find_text(std::string_view prompt) const override;

  const EmbeddingStore& images() const noexcept { return images_; }
  const EmbeddingStore& text() const noexcept { return text_; }

 private:
  EmbeddingStore images_;
  EmbeddingStore text_;
};

/// Decoder outputs keyed by image id, in insertion order.
class CandidateStore {
 public:
  /// Validates the output; throws DuplicateKey for a repeated image id.
  void insert(DecoderOutput output);
  const DecoderOutput* find(std::string_view image_id) const;

  std::size_t size() const noexcept { return outputs_.size(); }
  std::span<const DecoderOutput> outputs() const noexcept { return outputs_; }

 private:
  std::vector<DecoderOutput> outputs_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string decoder_output_to_json_line(const DecoderOutput& output);
/// Throws MalformedFile (with the line number) or UnsortedPositions.
DecoderOutput parse_decoder_output(std::string_view line);
CandidateStore parse_candidates(std::istream& in);
CandidateStore read_candidates(const std::filesystem::path& path);
void write_candidates(const CandidateStore& store, const std::filesystem::path& path);

std::string split_to_json(const SplitSpec& split);
/// Parses and validates; throws MalformedFile or InvalidSplit.
SplitSpec parse_split(std::string_view json);
SplitSpec read_split(const std::filesystem::path& path);
void write_split(const SplitSpec& split, const std::filesystem::path& path);

/// Reads a whole file; throws Io when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace zosd
