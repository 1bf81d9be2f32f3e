#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/error.hpp"
#include "mtme/text/utf8.hpp"

namespace mtme {

// Learned subword model. Word-final symbols carry the kEndOfWord suffix.
struct BpeModel {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;
  static constexpr int kReserved = 3;
  static constexpr std::string_view kEndOfWord = "</w>";

  std::vector<std::pair<std::string, std::string>> merges;
  std::vector<std::string> symbols;  // id -> symbol; first kReserved are reserved names

  std::size_t size() const { return symbols.size(); }

  int id(const std::string& symbol) const {
    auto it = index_.find(symbol);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& symbol) const { return index_.count(symbol) > 0; }

  // Rebuilds the lookup tables from merges/symbols; call after editing them.
  void reindex() {
    index_.clear();
    for (std::size_t i = kReserved; i < symbols.size(); ++i) {
      index_.emplace(symbols[i], static_cast<int>(i));
    }
    rank_.clear();
    for (std::size_t r = 0; r < merges.size(); ++r) {
      rank_.emplace(pairKey(merges[r].first, merges[r].second), static_cast<int>(r));
    }
  }

  int mergeRank(const std::string& a, const std::string& b) const {
    auto it = rank_.find(pairKey(a, b));
    return it == rank_.end() ? -1 : it->second;
  }

  static BpeModel empty() {
    BpeModel m;
    m.symbols = {"<pad>", "<unk>", "[SEP]"};
    m.reindex();
    return m;
  }

 private:
  static std::string pairKey(const std::string& a, const std::string& b) {
    std::string k = a;
    k.push_back('\x1f');
    k += b;
    return k;
  }

  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int> rank_;
};

namespace detail {

inline std::vector<std::string> wordSymbols(std::string_view word) {
  auto syms = utf8::codePoints(word);
  if (!syms.empty()) syms.back() += BpeModel::kEndOfWord;
  return syms;
}

}  // namespace detail

// Learns merges over whitespace-separated words of the corpus. Stops when the
// vocabulary (reserved ids included) reaches vocabSize or the most frequent
// pair occurs fewer than twice. Equal counts resolve to the smaller pair.
inline BpeModel bpeLearn(std::span<const std::string> corpus, std::size_t vocabSize = 8192) {
  if (corpus.empty()) throw InvalidArgument("bpeLearn: empty corpus");
  using Pair = std::pair<std::string, std::string>;

  std::map<std::string, long> wordCounts;
  for (const auto& line : corpus) {
    for (auto& w : utf8::splitWhitespace(line)) ++wordCounts[w];
  }

  struct Word {
    std::vector<std::string> syms;
    long count;
  };
  std::vector<Word> words;
  std::map<std::string, long> symbolCounts;
  for (const auto& [w, c] : wordCounts) {
    Word word{detail::wordSymbols(w), c};
    for (const auto& s : word.syms) symbolCounts[s] += c;
    words.push_back(std::move(word));
  }
  // Every character gets both its inner and its word-final form.
  std::vector<std::string> seen;
  for (const auto& [sym, c] : symbolCounts) seen.push_back(sym);
  for (const auto& sym : seen) {
    const bool final = sym.size() > BpeModel::kEndOfWord.size() && sym.ends_with(BpeModel::kEndOfWord);
    const std::string other =
        final ? sym.substr(0, sym.size() - BpeModel::kEndOfWord.size()) : sym + std::string(BpeModel::kEndOfWord);
    symbolCounts.emplace(other, 0);
  }

  BpeModel model = BpeModel::empty();
  const std::size_t budget = vocabSize > BpeModel::kReserved ? vocabSize - BpeModel::kReserved : 0;

  // Initial alphabet: most frequent symbols that fit in the budget.
  std::vector<std::pair<std::string, long>> alphabet(symbolCounts.begin(), symbolCounts.end());
  if (alphabet.size() > budget) {
    std::stable_sort(alphabet.begin(), alphabet.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    alphabet.resize(budget);
    std::sort(alphabet.begin(), alphabet.end());
  }
  std::set<std::string> known;
  for (const auto& [s, c] : alphabet) {
    model.symbols.push_back(s);
    known.insert(s);
  }

  std::map<Pair, long> pairCounts;
  std::map<Pair, std::set<std::size_t>> pairWords;
  auto byCount = [](const std::pair<long, Pair>& a, const std::pair<long, Pair>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::set<std::pair<long, Pair>, decltype(byCount)> ranked(byCount);

  auto adjust = [&](const Pair& p, long delta) {
    long& c = pairCounts[p];
    if (c > 0) ranked.erase({c, p});
    c += delta;
    if (c > 0) ranked.insert({c, p});
  };

  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const auto& syms = words[wi].syms;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      Pair p{syms[i], syms[i + 1]};
      adjust(p, words[wi].count);
      pairWords[p].insert(wi);
    }
  }

  while (model.symbols.size() < vocabSize) {
    // Pairs over symbols cut from the alphabet would produce unusable ids.
    auto it = std::find_if(ranked.begin(), ranked.end(), [&](const auto& e) {
      return known.count(e.second.first) && known.count(e.second.second);
    });
    if (it == ranked.end() || it->first < 2) break;
    const Pair best = it->second;
    const std::string merged = best.first + best.second;
    model.merges.push_back(best);
    if (known.insert(merged).second) model.symbols.push_back(merged);

    const auto affected = pairWords[best];
    for (std::size_t wi : affected) {
      auto& w = words[wi];
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) adjust({w.syms[i], w.syms[i + 1]}, -w.count);
      std::vector<std::string> next;
      next.reserve(w.syms.size());
      for (std::size_t i = 0; i < w.syms.size(); ++i) {
        if (i + 1 < w.syms.size() && w.syms[i] == best.first && w.syms[i + 1] == best.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(w.syms[i]);
        }
      }
      w.syms = std::move(next);
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        Pair p{w.syms[i], w.syms[i + 1]};
        adjust(p, w.count);
        pairWords[p].insert(wi);
      }
    }
  }
  model.reindex();
  return model;
}

// Applies merges to one word, lowest rank first.
inline std::vector<std::string> bpeSegmentWord(const BpeModel& model, std::string_view word) {
  auto syms = detail::wordSymbols(word);
  while (syms.size() > 1) {
    int bestRank = -1;
    std::size_t bestPos = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const int r = model.mergeRank(syms[i], syms[i + 1]);
      if (r >= 0 && (bestRank < 0 || r < bestRank)) {
        bestRank = r;
        bestPos = i;
      }
    }
    if (bestRank < 0) break;
    const auto& [a, b] = model.merges[static_cast<std::size_t>(bestRank)];
    std::vector<std::string> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i >= bestPos && i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
        next.push_back(a + b);
        ++i;
      } else {
        next.push_back(syms[i]);
      }
    }
    syms = std::move(next);
  }
  return syms;
}

inline std::vector<int> bpeEncode(const BpeModel& model, std::string_view text) {
  std::vector<int> ids;
  for (const auto& word : utf8::splitWhitespace(text)) {
    for (const auto& s : bpeSegmentWord(model, word)) ids.push_back(model.id(s));
  }
  return ids;
}

// Inverse of bpeEncode for in-vocabulary text with single spaces between words.
inline std::string bpeDecode(const BpeModel& model, std::span<const int> ids) {
  std::string out;
  bool pendingSpace = false;
  const auto eow = BpeModel::kEndOfWord;
  for (int id : ids) {
    if (id == BpeModel::kPad) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= model.size()) id = BpeModel::kUnk;
    std::string sym = model.symbols[static_cast<std::size_t>(id)];
    bool wordEnd = id < BpeModel::kReserved;
    if (sym.size() >= eow.size() && sym.compare(sym.size() - eow.size(), eow.size(), eow) == 0) {
      sym.resize(sym.size() - eow.size());
      wordEnd = true;
    }
    if (pendingSpace) out.push_back(' ');
    out += sym;
    pendingSpace = wordEnd;
  }
  return out;
}

inline nlohmann::json toJson(const BpeModel& model) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [a, b] : model.merges) merges.push_back({a, b});
  nlohmann::json vocab = nlohmann::json::object();
  for (std::size_t i = BpeModel::kReserved; i < model.symbols.size(); ++i) vocab[model.symbols[i]] = i;
  return {{"merges", merges},
          {"vocab", vocab},
          {"reserved", {{"pad", BpeModel::kPad}, {"unk", BpeModel::kUnk}, {"sep", BpeModel::kSep}}}};
}

inline BpeModel bpeFromJson(const nlohmann::json& j) {
  BpeModel model = BpeModel::empty();
  try {
    const auto& reserved = j.at("reserved");
    if (reserved.at("pad") != BpeModel::kPad || reserved.at("unk") != BpeModel::kUnk ||
        reserved.at("sep") != BpeModel::kSep) {
      throw InvalidArgument("bpe: unexpected reserved ids");
    }
    const auto& vocab = j.at("vocab");
    model.symbols.resize(BpeModel::kReserved + vocab.size());
    std::vector<bool> seen(model.symbols.size(), false);
    for (auto it = vocab.begin(); it != vocab.end(); ++it) {
      const auto id = it.value().get<long>();
      if (id < BpeModel::kReserved || static_cast<std::size_t>(id) >= model.symbols.size() ||
          seen[static_cast<std::size_t>(id)]) {
        throw InvalidArgument("bpe: vocabulary ids are not contiguous");
      }
      seen[static_cast<std::size_t>(id)] = true;
      model.symbols[static_cast<std::size_t>(id)] = it.key();
    }
    for (const auto& m : j.at("merges")) {
      model.merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bpe: malformed model: ") + e.what());
  }
  model.reindex();
  return model;
}

}  // namespace mtme
