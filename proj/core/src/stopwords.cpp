#include "zosd/stopwords.hpp"

#include "zosd/text.hpp"

namespace zosd {
namespace {

// v1: common English function words (articles, pronouns, auxiliaries,
// prepositions, conjunctions, determiners). Do not edit in place; bump the
// version instead so reports stay comparable.
constexpr std::string_view kEnglishV1[] = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
    "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
    "between", "both", "but", "by", "can", "cannot", "could", "did", "do", "does",
    "doing", "down", "during", "each", "either", "else", "ever", "every", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "however", "i", "if", "in", "into",
    "is", "it", "its", "itself", "just", "least", "less", "like", "many", "may",
    "me", "might", "more", "most", "much", "must", "my", "myself", "neither", "no",
    "nor", "not", "now", "of", "off", "often", "on", "once", "one", "only",
    "onto", "or", "other", "others", "ought", "our", "ours", "ourselves", "out", "over",
    "own", "per", "perhaps", "quite", "rather", "same", "several", "shall", "she", "should",
    "since", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "though", "through", "thus",
    "to", "too", "toward", "towards", "under", "until", "up", "upon", "us", "very",
    "via", "was", "we", "were", "what", "whatever", "when", "where", "whether", "which",
    "while", "who", "whom", "whose", "why", "will", "with", "within", "without", "would",
    "yet", "you", "your", "yours", "yourself", "yourselves", "also", "although", "among", "around",
};

}  // namespace

StopList::StopList(std::initializer_list<std::string_view> words) {
  for (auto w : words) insert(w);
}

const StopList& StopList::english() {
  static const StopList list(kEnglishV1);
  return list;
}

void StopList::insert(std::string_view word) {
  auto t = trim(word);
  if (t.empty()) return;
  words_.insert(to_lower_utf8(t));
}

bool StopList::contains(std::string_view word) const {
  return words_.find(to_lower_utf8(word)) != words_.end();
}

}  // namespace zosd
