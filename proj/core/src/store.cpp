#include "zosd/store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "zosd/text.hpp"

namespace zosd {

using nlohmann::json;

EmbeddingVector EmbeddingBackend::embed_image(std::string_view image_id) const {
  auto v = find_image(image_id);
  if (!v) throw Error(ErrorCode::MissingImage, "no embedding for image \"" + std::string(image_id) + "\"");
  return std::move(*v);
}

EmbeddingVector EmbeddingBackend::embed_text(std::string_view prompt) const {
  auto v = find_text(prompt);
  if (!v) throw Error(ErrorCode::MissingTextEmbedding, "no embedding for prompt \"" + std::string(prompt) + "\"");
  return std::move(*v);
}

// ---------------------------------------------------------------------------
// embedding store

void EmbeddingStore::insert(std::string key, EmbeddingVector vector) {
  if (!entries_.empty() && vector.dim() != dim()) {
    throw Error(ErrorCode::DimMismatch, "vector for \"" + key + "\" has dim " + std::to_string(vector.dim()) +
                                            ", store has " + std::to_string(dim()));
  }
  if (index_.contains(key)) throw Error(ErrorCode::DuplicateKey, "key \"" + key + "\" already stored");
  index_.emplace(key, entries_.size());
  entries_.push_back({std::move(key), std::move(vector)});
}

const EmbeddingVector* EmbeddingStore::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : &entries_[it->second].vector;
}

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

void put_u32(std::string& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedFile, std::string("file ends inside ") + what + " at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_store(const EmbeddingStore& store) {
  if (store.size() > UINT32_MAX || store.dim() > UINT32_MAX) {
    throw Error(ErrorCode::InvalidArgument, "store too large for the u32 header");
  }
  std::string out;
  out.reserve(16 + store.size() * (8 + store.dim() * 4));
  out.append(kStoreMagic);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  put_u32(out, static_cast<std::uint32_t>(store.dim()));
  for (const auto& e : store.entries()) {
    if (e.key.size() > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "key too long");
    put_u32(out, static_cast<std::uint32_t>(e.key.size()));
    out.append(e.key);
    for (float f : e.vector.values()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

EmbeddingStore decode_store(std::string_view bytes) {
  Reader r(bytes);
  const auto magic = r.take(kStoreMagic.size(), "magic");
  if (magic != kStoreMagic) throw Error(ErrorCode::BadMagic, "expected magic ZOSDEMB1");
  const std::uint32_t count = r.u32("header");
  const std::uint32_t dim = r.u32("header");
  if (count > 0 && dim == 0) throw Error(ErrorCode::MalformedFile, "dim is 0 for a non-empty store");

  EmbeddingStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t key_len = r.u32("record key length");
    std::string key(r.take(key_len, "record key"));
    if (!is_valid_utf8(key)) throw Error(ErrorCode::MalformedFile, "record " + std::to_string(i) + " key is not UTF-8");
    std::vector<float> values(dim);
    for (auto& v : values) v = std::bit_cast<float>(r.u32("record values"));
    EmbeddingVector vec;
    try {
      vec = EmbeddingVector::from_unit(std::move(values));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFinite) throw Error(ErrorCode::NormViolation, "\"" + key + "\": " + e.what());
      throw Error(e.code(), "\"" + key + "\": " + e.what());
    }
    store.insert(std::move(key), std::move(vec));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::MalformedFile, std::to_string(r.remaining()) + " trailing bytes after " +
                                              std::to_string(count) + " records");
  }
  return store;
}

EmbeddingStore read_store(const std::filesystem::path& path) {
  try {
    return decode_store(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, encode_store(store));
}

StoreBackend::StoreBackend(EmbeddingStore images, EmbeddingStore text)
    : images_(std::move(images)), text_(std::move(text)) {
  if (!images_.empty() && !text_.empty() && images_.dim() != text_.dim()) {
    throw Error(ErrorCode::DimMismatch, "image store dim " + std::to_string(images_.dim()) +
                                            " differs from text store dim " + std::to_string(text_.dim()));
  }
}

std::optional<EmbeddingVector> StoreBackend::find_image(std::string_view image_id) const {
  if (const auto* v = images_.find(image_id)) return *v;
  return std::nullopt;
}

std::optional<EmbeddingVector> StoreBackend::find_text(std::string_view prompt) const {
  if (const auto* v = text_.find(prompt)) return *v;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// candidate logits (JSON Lines)

void CandidateStore::insert(DecoderOutput output) {
  output.validate();
  if (index_.contains(output.image_id)) {
    throw Error(ErrorCode::DuplicateKey, "decoder output for \"" + output.image_id + "\" appears twice");
  }
  index_.emplace(output.image_id, outputs_.size());
  outputs_.push_back(std::move(output));
}

const DecoderOutput* CandidateStore::find(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &outputs_[it->second];
}

std::string decoder_output_to_json_line(const DecoderOutput& output) {
  json positions = json::array();
  for (const auto& p : output.positions) {
    json entries = json::array();
    for (const auto& e : p.entries()) entries.push_back(json::array({e.word, e.logprob}));
    positions.push_back(std::move(entries));
  }
  json j = {{"image_id", output.image_id}, {"stored_k", output.stored_k}, {"positions", std::move(positions)}};
  return j.dump();
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedFile, what); }

}  // namespace

DecoderOutput parse_decoder_output(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("record is not a JSON object");
  if (!j.contains("image_id") || !j["image_id"].is_string()) malformed("missing string \"image_id\"");
  if (!j.contains("stored_k") || !j["stored_k"].is_number_unsigned()) malformed("missing unsigned \"stored_k\"");
  if (!j.contains("positions") || !j["positions"].is_array()) malformed("missing array \"positions\"");

  DecoderOutput out;
  out.image_id = j["image_id"].get<std::string>();
  out.stored_k = j["stored_k"].get<std::size_t>();
  for (const auto& p : j["positions"]) {
    if (!p.is_array()) malformed("position is not an array");
    std::vector<WordLogprob> entries;
    entries.reserve(p.size());
    for (const auto& e : p) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number()) {
        malformed("position entry must be [word, logprob]");
      }
      entries.push_back({e[0].get<std::string>(), e[1].get<double>()});
    }
    try {
      out.positions.emplace_back(std::move(entries));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::UnsortedPositions) {
        throw Error(ErrorCode::UnsortedPositions, "\"" + out.image_id + "\": " + err.what());
      }
      malformed("\"" + out.image_id + "\": " + err.what());
    }
  }
  try {
    out.validate();
  } catch (const Error& err) {
    malformed(err.what());
  }
  return out;
}

CandidateStore parse_candidates(std::istream& in) {
  CandidateStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      store.insert(parse_decoder_output(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

CandidateStore read_candidates(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return parse_candidates(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_candidates(const CandidateStore& store, const std::filesystem::path& path) {
  std::string out;
  for (const auto& o : store.outputs()) {
    out += decoder_output_to_json_line(o);
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// split files

std::string split_to_json(const SplitSpec& split) {
  json images = json::array();
  for (const auto& img : split.images) images.push_back({{"id", img.id}, {"class", img.class_name}});
  json j = {{"name", split.name}, {"seen", split.seen_classes}, {"unseen", split.unseen_classes}, {"images", images}};
  return j.dump(2) + "\n";
}

SplitSpec parse_split(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  auto string_list = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) malformed(std::string("missing array \"") + key + "\"");
    std::vector<std::string> out;
    for (const auto& v : j[key]) {
      if (!v.is_string()) malformed(std::string("\"") + key + "\" must hold strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  };
  if (!j.is_object()) malformed("split is not a JSON object");
  if (!j.contains("name") || !j["name"].is_string()) malformed("missing string \"name\"");
  SplitSpec split;
  split.name = j["name"].get<std::string>();
  split.seen_classes = string_list("seen");
  split.unseen_classes = string_list("unseen");
  if (!j.contains("images") || !j["images"].is_array()) malformed("missing array \"images\"");
  for (const auto& img : j["images"]) {
    if (!img.is_object() || !img.contains("id") || !img["id"].is_string() || !img.contains("class") ||
        !img["class"].is_string()) {
      malformed("image entries must be {\"id\": string, \"class\": string}");
    }
    split.images.push_back({img["id"].get<std::string>(), img["class"].get<std::string>()});
  }
  split.validate();
  return split;
}

SplitSpec read_split(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return parse_split(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_split(const SplitSpec& split, const std::filesystem::path& path) {
  write_file_atomic(path, split_to_json(split));
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "error reading " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "error writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace zosd
