#ifndef MORE3D_TEXT_HPP_
#define MORE3D_TEXT_HPP_

#include <map>
#include <string>
#include <vector>

namespace more3d {

// Reserved token ids.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kSeg = 4;
inline constexpr int kNumReserved = 5;

inline constexpr const char* kSegLiteral = "<SEG>";

// Word-level tokens: reserved literals (`<PAD>`, `<BOS>`, `<EOS>`, `<UNK>`,
// `<SEG>`) kept whole, runs of word characters, and single punctuation marks.
std::vector<std::string> tokenize(const std::string& text);

// Canonical text form: tokens joined by single spaces.
std::string normalize_text(const std::string& text);

class Vocab {
 public:
  Vocab() = default;

  // Frequency-sorted word vocabulary (ties alphabetical) over the corpus.
  // Reserved literals never enter the word list.
  static Vocab build(const std::vector<std::string>& corpus);

  int size() const { return kNumReserved + static_cast<int>(words_.size()); }
  int id_of(const std::string& token) const;           // kUnk if absent
  const std::string& token_of(int id) const;           // renders reserved names
  const std::vector<std::string>& words() const { return words_; }

  // {"tokens": [...]} with implicit ids by position after the reserved block.
  std::string to_json() const;
  static Vocab from_json(const std::string& text);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> words_;             // id = kNumReserved + index
  std::map<std::string, int> index_;           // word -> id
};

enum class TextOrigin { kQuestion, kAnswer, kConcatenated };

struct TokenSequence {
  std::vector<int> ids;
  TextOrigin origin = TextOrigin::kConcatenated;

  int length() const { return static_cast<int>(ids.size()); }
};

TokenSequence encode(const Vocab& vocab, const std::string& text,
                     TextOrigin origin = TextOrigin::kConcatenated);
std::string decode(const Vocab& vocab, const TokenSequence& tokens);

// Positions I_seg of the SEG token within a sequence, strictly ascending.
struct MultiSegIndexList {
  std::vector<int> indices;

  int count() const { return static_cast<int>(indices.size()); }
};

MultiSegIndexList extract_seg_indices(const TokenSequence& tokens);

// SEG marker count in raw text (validator and stats helper).
int count_seg_markers(const std::string& text);

}  // namespace more3d

#endif  // MORE3D_TEXT_HPP_
