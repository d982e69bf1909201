#include "more3d/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "more3d/errors.hpp"

namespace more3d {

using json = nlohmann::json;

namespace {

const std::vector<std::string>& reserved_literals() {
  static const std::vector<std::string> lits = {"<PAD>", "<BOS>", "<EOS>",
                                                "<UNK>", "<SEG>"};
  return lits;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
}

// Reserved literal starting at position i, or -1.
int match_reserved(const std::string& text, size_t i) {
  const auto& lits = reserved_literals();
  for (size_t r = 0; r < lits.size(); ++r) {
    if (text.compare(i, lits[r].size(), lits[r]) == 0) {
      return static_cast<int>(r);
    }
  }
  return -1;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const int reserved = match_reserved(text, i);
    if (reserved >= 0) {
      out.push_back(reserved_literals()[static_cast<size_t>(reserved)]);
      i += reserved_literals()[static_cast<size_t>(reserved)].size();
      continue;
    }
    if (is_word_char(c)) {
      size_t j = i;
      while (j < text.size() && is_word_char(text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    out.push_back(std::string(1, c));  // punctuation, one token per char
    ++i;
  }
  return out;
}

std::string normalize_text(const std::string& text) {
  const auto tokens = tokenize(text);
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocab Vocab::build(const std::vector<std::string>& corpus) {
  if (corpus.empty()) throw DataError("vocab corpus is empty");
  std::map<std::string, long> counts;
  for (const auto& text : corpus) {
    for (const auto& token : tokenize(text)) {
      const auto& lits = reserved_literals();
      if (std::find(lits.begin(), lits.end(), token) != lits.end()) continue;
      ++counts[token];
    }
  }
  std::vector<std::pair<std::string, long>> entries(counts.begin(),
                                                    counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  for (const auto& [word, _] : entries) {
    vocab.index_[word] = kNumReserved + static_cast<int>(vocab.words_.size());
    vocab.words_.push_back(word);
  }
  return vocab;
}

int Vocab::id_of(const std::string& token) const {
  const auto& lits = reserved_literals();
  for (size_t r = 0; r < lits.size(); ++r) {
    if (token == lits[r]) return static_cast<int>(r);
  }
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw RuntimeFault("token id out of range: " + std::to_string(id) +
                       " (vocab size " + std::to_string(size()) + ")");
  }
  if (id < kNumReserved) return reserved_literals()[static_cast<size_t>(id)];
  return words_[static_cast<size_t>(id - kNumReserved)];
}

std::string Vocab::to_json() const {
  json j;
  j["tokens"] = words_;
  return j.dump();
}

Vocab Vocab::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("vocab JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("tokens")) {
    throw DataError("vocab JSON must be an object with a 'tokens' array");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "tokens") {
      throw DataError("vocab JSON: unknown field '" + it.key() + "'");
    }
  }
  Vocab vocab;
  for (const auto& t : j["tokens"]) {
    const std::string word = t.get<std::string>();
    if (vocab.index_.count(word)) {
      throw DataError("vocab JSON: duplicate token '" + word + "'");
    }
    vocab.index_[word] = kNumReserved + static_cast<int>(vocab.words_.size());
    vocab.words_.push_back(word);
  }
  return vocab;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << to_json() << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocab file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

TokenSequence encode(const Vocab& vocab, const std::string& text,
                     TextOrigin origin) {
  TokenSequence seq;
  seq.origin = origin;
  for (const auto& token : tokenize(text)) {
    seq.ids.push_back(vocab.id_of(token));
  }
  return seq;
}

std::string decode(const Vocab& vocab, const TokenSequence& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token_of(tokens.ids[i]);
  }
  return out;
}

MultiSegIndexList extract_seg_indices(const TokenSequence& tokens) {
  MultiSegIndexList list;
  for (size_t i = 0; i < tokens.ids.size(); ++i) {
    if (tokens.ids[i] == kSeg) list.indices.push_back(static_cast<int>(i));
  }
  return list;
}

int count_seg_markers(const std::string& text) {
  int count = 0;
  size_t pos = 0;
  const std::string needle = kSegLiteral;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace more3d
