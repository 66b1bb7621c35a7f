#include "zosd/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "zosd/text.hpp"

namespace zosd {

bool ranks_before(const WordLogprob& a, const WordLogprob& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  const auto la = to_lower_utf8(a.word);
  const auto lb = to_lower_utf8(b.word);
  if (la != lb) return la < lb;
  return a.word < b.word;
}

PositionTopK::PositionTopK(std::vector<WordLogprob> entries) : entries_(std::move(entries)) {
  std::unordered_set<std::string_view> words;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.word.empty()) throw Error(ErrorCode::InvalidArgument, "empty word in position list");
    if (!std::isfinite(e.logprob)) throw Error(ErrorCode::NonFinite, "logprob of \"" + e.word + "\" is not finite");
    if (!words.insert(e.word).second) {
      throw Error(ErrorCode::UnsortedPositions, "word \"" + e.word + "\" repeats within one position");
    }
    if (i > 0 && !ranks_before(entries_[i - 1], e)) {
      throw Error(ErrorCode::UnsortedPositions,
                  "\"" + entries_[i - 1].word + "\" must not precede \"" + e.word + "\"");
    }
  }
}

PositionTopK PositionTopK::from_unsorted(std::vector<WordLogprob> entries) {
  std::sort(entries.begin(), entries.end(), ranks_before);
  return PositionTopK(std::move(entries));
}

void DecoderOutput::validate() const {
  if (positions.empty()) throw Error(ErrorCode::InvalidArgument, "decoder output for \"" + image_id + "\" has no positions");
  if (stored_k == 0) throw Error(ErrorCode::InvalidArgument, "stored_k must be at least 1");
  for (const auto& p : positions) {
    if (p.size() > stored_k) {
      throw Error(ErrorCode::InvalidArgument, "position holds " + std::to_string(p.size()) +
                                                  " entries, more than stored_k=" + std::to_string(stored_k));
    }
  }
}

std::vector<Label> CandidateSet::labels() const {
  std::vector<Label> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.label);
  return out;
}

CandidateSet extract_candidates(const DecoderOutput& d, const ScoringConfig& config,
                                const StopList& stoplist, std::span<const Label> seen) {
  config.validate();
  if (config.k > d.stored_k) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(config.k) + " exceeds stored_k=" +
                                          std::to_string(d.stored_k) + " for \"" + d.image_id + "\"");
  }
  std::unordered_set<std::string> seen_keys;
  if (config.dedup_against_seen) {
    for (const auto& s : seen) seen_keys.insert(fold_key(s.name));
  }

  CandidateSet out;
  // folded key -> index into out.candidates
  std::unordered_map<std::string, std::size_t> index;
  std::unordered_set<std::string> rejected;
  for (const auto& position : d.positions) {
    const auto entries = position.entries();
    const std::size_t take = std::min(config.k, entries.size());
    for (std::size_t r = 0; r < take; ++r) {
      const auto& e = entries[r];
      auto key = fold_key(e.word);
      if (auto it = index.find(key); it != index.end()) {
        auto& best = out.candidates[it->second].best_logprob;
        best = std::max(best, e.logprob);
        continue;
      }
      if (rejected.contains(key)) continue;
      if ((config.filter_stopwords && stoplist.contains(e.word)) || seen_keys.contains(key)) {
        rejected.insert(std::move(key));
        continue;
      }
      index.emplace(std::move(key), out.candidates.size());
      out.candidates.push_back({generated_label(e.word), e.logprob});
    }
  }
  return out;
}

double teacher_forcing_loss(std::span<const std::vector<double>> logits,
                            std::span<const std::size_t> targets) {
  if (logits.empty()) throw Error(ErrorCode::ShapeMismatch, "logit matrix has no rows");
  if (targets.size() != logits.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(targets.size()) + " targets for " +
                                              std::to_string(logits.size()) + " positions");
  }
  const std::size_t vocab = logits.front().size();
  if (vocab == 0) throw Error(ErrorCode::ShapeMismatch, "logit rows are empty");
  double loss = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const auto& row = logits[t];
    if (row.size() != vocab) throw Error(ErrorCode::ShapeMismatch, "logit rows differ in width");
    if (targets[t] >= vocab) {
      throw Error(ErrorCode::IndexOutOfRange, "target " + std::to_string(targets[t]) +
                                                  " outside vocabulary of " + std::to_string(vocab));
    }
    loss += log_sum_exp(row) - row[targets[t]];
  }
  // log_sum_exp(row) >= max(row) >= row[target] holds exactly in the ideal;
  // rounding can leave a sub-ulp negative residue.
  return std::max(loss, 0.0);
}

}  // namespace zosd
