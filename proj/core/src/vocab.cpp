#include "gcap/vocab.hpp"

#include <fstream>
#include <sstream>

#include "gcap/common.hpp"

namespace gcap {

std::vector<std::string> tokenize(const std::string& sentence) {
  std::vector<std::string> tokens;
  std::istringstream is(sentence);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

void Vocabulary::push(const std::string& word) {
  if (index_.count(word)) return;
  index_.emplace(word, static_cast<int>(words_.size()));
  words_.push_back(word);
}

Vocabulary Vocabulary::build(std::span<const std::string> training_sentences) {
  if (training_sentences.empty()) {
    throw ValidationError("Vocabulary::build: empty training corpus");
  }
  Vocabulary v;
  for (const char* s : kSpecials) v.push(s);
  for (const auto& sentence : training_sentences) {
    for (const auto& tok : tokenize(sentence)) v.push(tok);
  }
  return v;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= words_.size()) {
    throw ValidationError("Vocabulary::word: id " + std::to_string(id) + " out of range (size " +
                          std::to_string(words_.size()) + ")");
  }
  return words_[static_cast<size_t>(id)];
}

int Vocabulary::id_or_unk(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

void Vocabulary::save(const std::filesystem::path& file) const {
  std::ofstream os(file);
  if (!os) throw ValidationError("Vocabulary::save: cannot open " + file.string());
  for (const auto& w : words_) os << w << "\n";
}

Vocabulary Vocabulary::load(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("Vocabulary::load: cannot open " + file.string());
  Vocabulary v;
  std::string line;
  while (std::getline(is, line)) {
    if (v.index_.count(line)) {
      throw ValidationError("Vocabulary::load: duplicate token '" + line + "' in " +
                            file.string());
    }
    v.push(line);
  }
  for (int i = 0; i < 4; ++i) {
    if (v.words_.size() <= static_cast<size_t>(i) || v.words_[i] != kSpecials[i]) {
      throw ValidationError("Vocabulary::load: special tokens missing or out of order in " +
                            file.string());
    }
  }
  return v;
}

std::vector<int> encode(const std::string& sentence, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.push_back(Vocabulary::kBos);
  auto tokens = tokenize(sentence);
  const size_t n = std::min(tokens.size(), kMaxSentenceLen);
  for (size_t i = 0; i < n; ++i) ids.push_back(vocab.id_or_unk(tokens[i]));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

std::string decode(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (id == Vocabulary::kBos || id == Vocabulary::kEos || id == Vocabulary::kPad) continue;
    const std::string& w = vocab.word(id);
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace gcap
