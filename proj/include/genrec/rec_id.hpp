#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genrec/rng.hpp"
#include "genrec/tensor.hpp"

namespace genrec {

// Single shared decoder vocabulary: two reserved symbols, then one
// disjoint integer range per semantic level, then the popularity range.
// The trie recovers per-level discipline during generation.
struct TokenVocab {
  int levels = 3;
  int64_t codebook_size = 128;
  int64_t pop_vocab = 256;

  int64_t size() const { return 2 + levels * codebook_size + pop_vocab; }
  int64_t pad() const { return 0; }
  int64_t bos() const { return 1; }
  int64_t semantic_token(int level, int32_t code) const {
    return 2 + static_cast<int64_t>(level) * codebook_size + code;
  }
  int64_t pop_token(int32_t rank) const {  // rank is 1-based
    return 2 + static_cast<int64_t>(levels) * codebook_size + (rank - 1);
  }
  int id_length() const { return levels + 1; }
};

// An item's generated identifier: per-level codeword indices plus the
// 1-based rank within its collision group.
struct RecId {
  std::vector<int32_t> semantic;
  int32_t pop = 0;

  bool operator==(const RecId& o) const {
    return semantic == o.semantic && pop == o.pop;
  }
};

enum class TokenAssignment { kPopularity, kRandom };

// Bijective item <-> Rec-ID map plus the prefix trie of valid token
// sequences used by constrained decoding.
class RecIdRegistry {
public:
  // popularity[i] is the training interaction count of item i. For the
  // random variant the order within a collision group is a seeded shuffle
  // instead of the popularity sort.
  static RecIdRegistry build(const std::vector<std::vector<int32_t>>& codes_per_item,
                             const std::vector<int64_t>& popularity,
                             int64_t codebook_size,
                             TokenAssignment variant = TokenAssignment::kPopularity,
                             uint64_t seed = 0, int64_t max_group = 256);

  int64_t item_count() const { return static_cast<int64_t>(ids_.size()); }
  const TokenVocab& vocab() const { return vocab_; }
  const RecId& rec_id(int64_t item) const { return ids_[static_cast<size_t>(item)]; }

  // Vocabulary-encoded token sequence of an item, length levels+1.
  std::vector<int64_t> tokens_of(int64_t item) const;
  std::optional<int64_t> item_of(const std::vector<int64_t>& tokens) const;

  // Children of the prefix node; empty when the prefix is complete or not
  // a valid path. Tokens ascend.
  std::vector<int64_t> valid_next_tokens(const std::vector<int64_t>& prefix) const;

  // Fraction of items whose semantic tuple is shared with another item
  // (before the popularity token distinguishes them).
  double collision_rate() const { return collision_rate_; }
  // group size -> number of groups of that size
  const std::map<int64_t, int64_t>& group_histogram() const { return histogram_; }
  std::string collision_report() const;

private:
  struct TrieNode {
    std::vector<std::pair<int64_t, int32_t>> children;  // token -> node, sorted
    int64_t item = -1;
  };

  int32_t trie_walk(const std::vector<int64_t>& tokens, size_t count) const;
  void trie_insert(const std::vector<int64_t>& tokens, int64_t item);

  TokenVocab vocab_;
  std::vector<RecId> ids_;
  std::vector<TrieNode> nodes_;
  double collision_rate_ = 0.0;
  std::map<int64_t, int64_t> histogram_;
};

// `item_id c1 .. c_{M-1} p` per line.
void save_rec_ids(const std::string& path, const RecIdRegistry& registry);

}  // namespace genrec
