#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gcap/common.hpp"
#include "gcap/vocab.hpp"

using namespace gcap;
namespace fs = std::filesystem;

TEST_SUITE("vocab") {

TEST_CASE("build collects distinct whitespace tokens plus specials") {
  const std::vector<std::string> corpus = {"a cat", "a dog"};
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.size() == 7);  // 4 specials + a, cat, dog
  CHECK(v.contains("a"));
  CHECK(v.contains("cat"));
  CHECK(v.contains("dog"));
  CHECK(v.word(Vocabulary::kBos) == "<bos>");
  CHECK(v.word(Vocabulary::kUnk) == "<unk>");
}

TEST_CASE("no lowercasing or other normalization") {
  const std::vector<std::string> corpus = {"Cat", "cat"};
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.size() == 6);
  CHECK(v.id_or_unk("Cat") != v.id_or_unk("cat"));

  const std::vector<std::string> punct = {"dog. dog"};
  const Vocabulary p = Vocabulary::build(punct);
  CHECK(p.size() == 6);  // "dog." and "dog" stay distinct
}

TEST_CASE("empty corpus is rejected") {
  const std::vector<std::string> corpus;
  CHECK_THROWS_AS(Vocabulary::build(corpus), ValidationError);
}

TEST_CASE("construction is deterministic") {
  const std::vector<std::string> corpus = {"b a", "c a d", "e"};
  const Vocabulary v1 = Vocabulary::build(corpus);
  const Vocabulary v2 = Vocabulary::build(corpus);
  CHECK(v1.size() == v2.size());
  for (size_t i = 0; i < v1.size(); ++i) CHECK(v1.word(static_cast<int>(i)) == v2.word(static_cast<int>(i)));
  // insertion order of first occurrence
  CHECK(v1.word(4) == "b");
  CHECK(v1.word(5) == "a");
  CHECK(v1.word(6) == "c");
}

TEST_CASE("encode adds specials and maps OOV to UNK") {
  const std::vector<std::string> corpus = {"a cat", "a dog"};
  const Vocabulary v = Vocabulary::build(corpus);

  const std::vector<int> cat = encode("a cat", v);
  CHECK(cat.size() == 4);
  CHECK(cat.front() == Vocabulary::kBos);
  CHECK(cat.back() == Vocabulary::kEos);
  CHECK(v.word(cat[1]) == "a");
  CHECK(v.word(cat[2]) == "cat");

  const std::vector<int> zebra = encode("a zebra", v);
  CHECK(zebra[2] == Vocabulary::kUnk);
}

TEST_CASE("encode truncates the interior to 20 tokens") {
  const std::vector<std::string> corpus = {"w"};
  const Vocabulary v = Vocabulary::build(corpus);
  std::string sentence;
  for (int i = 0; i < 25; ++i) sentence += "w ";
  const std::vector<int> ids = encode(sentence, v);
  CHECK(ids.size() == 22);  // BOS + 20 + EOS
}

TEST_CASE("every emitted id is inside the vocabulary") {
  const std::vector<std::string> corpus = {"a cat sat", "on the mat"};
  const Vocabulary v = Vocabulary::build(corpus);
  for (int id : encode("the unknown zebra sat on a rug", v)) {
    CHECK(id >= 0);
    CHECK(static_cast<size_t>(id) < v.size());
  }
}

TEST_CASE("decode strips specials and round-trips") {
  const std::vector<std::string> corpus = {"a cat", "a dog"};
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(decode(encode("a cat", v), v) == "a cat");

  const std::vector<int> empty = {Vocabulary::kBos, Vocabulary::kEos};
  CHECK(decode(empty, v).empty());
}

TEST_CASE("decode rejects out-of-range ids") {
  const std::vector<std::string> corpus = {"a"};
  const Vocabulary v = Vocabulary::build(corpus);
  const std::vector<int> bad = {Vocabulary::kBos, 99, Vocabulary::kEos};
  CHECK_THROWS_AS(decode(bad, v), ValidationError);
}

TEST_CASE("round-trip identity over random in-vocabulary sentences") {
  const std::vector<std::string> corpus = {"a cat sat on the mat", "dogs chase red balls",
                                           "birds fly south quickly"};
  const Vocabulary v = Vocabulary::build(corpus);
  std::vector<std::string> words;
  for (size_t i = 4; i < v.size(); ++i) words.push_back(v.word(static_cast<int>(i)));

  RandomStream rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t len = 1 + rng.next_index(kMaxSentenceLen);
    std::string sentence;
    for (size_t k = 0; k < len; ++k) {
      if (k) sentence += ' ';
      sentence += words[rng.next_index(words.size())];
    }
    CHECK(decode(encode(sentence, v), v) == sentence);
  }
}

TEST_CASE("persistence round-trips and the loader rejects duplicates") {
  const std::vector<std::string> corpus = {"a cat", "a dog"};
  const Vocabulary v = Vocabulary::build(corpus);
  const fs::path file = fs::temp_directory_path() / "gcap_vocab_test.txt";
  v.save(file);
  const Vocabulary loaded = Vocabulary::load(file);
  CHECK(loaded.size() == v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    CHECK(loaded.word(static_cast<int>(i)) == v.word(static_cast<int>(i)));
  }

  std::ofstream os(file, std::ios::app);
  os << "cat\n";
  os.close();
  CHECK_THROWS_WITH_AS(Vocabulary::load(file), doctest::Contains("duplicate"), ValidationError);
  fs::remove(file);
}

}  // TEST_SUITE
