#ifndef GCAP_VOCAB_HPP_
#define GCAP_VOCAB_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gcap {

// Hard cap on interior sentence length; encode() truncates beyond it.
inline constexpr size_t kMaxSentenceLen = 20;

// Caption vocabulary: raw whitespace tokens exactly as written in the
// training sentences (no lowercasing, punctuation stays attached), plus the
// four reserved specials at ids 0..3.
class Vocabulary {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kPad = 2;
  static constexpr int kUnk = 3;
  static constexpr const char* kSpecials[4] = {"<bos>", "<eos>", "<pad>", "<unk>"};

  static Vocabulary build(std::span<const std::string> training_sentences);

  size_t size() const { return words_.size(); }
  const std::string& word(int id) const;

  // id of a known word; kUnk for anything unseen
  int id_or_unk(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  // One token per line, line number = id, specials first.
  void save(const std::filesystem::path& file) const;
  static Vocabulary load(const std::filesystem::path& file);

 private:
  Vocabulary() = default;
  void push(const std::string& word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Whitespace split, nothing else.
std::vector<std::string> tokenize(const std::string& sentence);

// BOS + ids (unknown -> UNK) + EOS, interior truncated to kMaxSentenceLen.
std::vector<int> encode(const std::string& sentence, const Vocabulary& vocab);

// Strips BOS/EOS/PAD and joins with single spaces. Rejects out-of-range ids.
std::string decode(std::span<const int> ids, const Vocabulary& vocab);

}  // namespace gcap

#endif  // GCAP_VOCAB_HPP_
