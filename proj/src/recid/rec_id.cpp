#include "genrec/rec_id.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace genrec {

namespace {
// key of a semantic tuple for grouping; codes are < 2^16 in practice
std::string tuple_key(const std::vector<int32_t>& codes) {
  std::string k;
  k.reserve(codes.size() * 4);
  for (int32_t c : codes) {
    k.push_back(static_cast<char>(c & 0xff));
    k.push_back(static_cast<char>((c >> 8) & 0xff));
    k.push_back(static_cast<char>((c >> 16) & 0xff));
    k.push_back(':');
  }
  return k;
}
}  // namespace

RecIdRegistry RecIdRegistry::build(
    const std::vector<std::vector<int32_t>>& codes_per_item,
    const std::vector<int64_t>& popularity, int64_t codebook_size,
    TokenAssignment variant, uint64_t seed, int64_t max_group) {
  if (codes_per_item.empty()) throw DataError("rec-id registry: empty catalog");
  const int levels = static_cast<int>(codes_per_item.front().size());
  const int64_t n = static_cast<int64_t>(codes_per_item.size());
  if (popularity.size() != codes_per_item.size())
    throw DataError("rec-id registry: popularity count " +
                    std::to_string(popularity.size()) + " != item count " +
                    std::to_string(n));

  RecIdRegistry reg;
  reg.vocab_.levels = levels;
  reg.vocab_.codebook_size = codebook_size;
  reg.vocab_.pop_vocab = max_group;
  reg.ids_.resize(static_cast<size_t>(n));
  reg.nodes_.emplace_back();  // root

  std::unordered_map<std::string, std::vector<int64_t>> groups;
  for (int64_t i = 0; i < n; ++i) {
    const auto& codes = codes_per_item[static_cast<size_t>(i)];
    if (static_cast<int>(codes.size()) != levels)
      throw DataError("rec-id registry: item " + std::to_string(i) +
                      " has " + std::to_string(codes.size()) +
                      " codewords, expected " + std::to_string(levels));
    for (int32_t c : codes)
      if (c < 0 || c >= codebook_size)
        throw DataError("rec-id registry: codeword " + std::to_string(c) +
                        " out of range for codebook size " +
                        std::to_string(codebook_size));
    groups[tuple_key(codes)].push_back(i);
  }

  Rng rng(seed);
  int64_t colliding_items = 0;
  // deterministic group order: by smallest member
  std::vector<std::vector<int64_t>*> ordered;
  ordered.reserve(groups.size());
  for (auto& [key, members] : groups) ordered.push_back(&members);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->front() < b->front(); });

  for (auto* members_ptr : ordered) {
    auto& members = *members_ptr;
    std::sort(members.begin(), members.end());
    const int64_t k = static_cast<int64_t>(members.size());
    if (k > max_group) {
      std::ostringstream os;
      os << "collision group of " << k << " items exceeds the popularity "
         << "vocabulary (" << max_group << "); items:";
      for (int64_t i : members) os << ' ' << i;
      throw DataError(os.str());
    }
    if (k > 1) colliding_items += k;
    reg.histogram_[k]++;

    if (variant == TokenAssignment::kPopularity) {
      // most popular first, ties to the lower item index
      std::stable_sort(members.begin(), members.end(), [&](int64_t a, int64_t b) {
        return popularity[static_cast<size_t>(a)] > popularity[static_cast<size_t>(b)];
      });
    } else {
      rng.shuffle(members);
    }
    for (int64_t rank = 0; rank < k; ++rank) {
      const int64_t item = members[static_cast<size_t>(rank)];
      RecId id;
      id.semantic = codes_per_item[static_cast<size_t>(item)];
      id.pop = static_cast<int32_t>(rank + 1);
      reg.ids_[static_cast<size_t>(item)] = std::move(id);
    }
  }
  reg.collision_rate_ = static_cast<double>(colliding_items) / static_cast<double>(n);

  for (int64_t i = 0; i < n; ++i) reg.trie_insert(reg.tokens_of(i), i);
  return reg;
}

std::vector<int64_t> RecIdRegistry::tokens_of(int64_t item) const {
  const RecId& id = ids_[static_cast<size_t>(item)];
  std::vector<int64_t> out;
  out.reserve(id.semantic.size() + 1);
  for (int m = 0; m < static_cast<int>(id.semantic.size()); ++m)
    out.push_back(vocab_.semantic_token(m, id.semantic[static_cast<size_t>(m)]));
  out.push_back(vocab_.pop_token(id.pop));
  return out;
}

int32_t RecIdRegistry::trie_walk(const std::vector<int64_t>& tokens,
                                 size_t count) const {
  int32_t node = 0;
  for (size_t d = 0; d < count; ++d) {
    const auto& ch = nodes_[static_cast<size_t>(node)].children;
    auto it = std::lower_bound(
        ch.begin(), ch.end(), tokens[d],
        [](const std::pair<int64_t, int32_t>& e, int64_t t) { return e.first < t; });
    if (it == ch.end() || it->first != tokens[d]) return -1;
    node = it->second;
  }
  return node;
}

void RecIdRegistry::trie_insert(const std::vector<int64_t>& tokens, int64_t item) {
  int32_t node = 0;
  for (int64_t t : tokens) {
    auto& ch = nodes_[static_cast<size_t>(node)].children;
    auto it = std::lower_bound(
        ch.begin(), ch.end(), t,
        [](const std::pair<int64_t, int32_t>& e, int64_t tok) { return e.first < tok; });
    if (it != ch.end() && it->first == t) {
      node = it->second;
    } else {
      const int32_t child = static_cast<int32_t>(nodes_.size());
      ch.insert(it, {t, child});
      nodes_.emplace_back();
      node = child;
    }
  }
  nodes_[static_cast<size_t>(node)].item = item;
}

std::optional<int64_t> RecIdRegistry::item_of(const std::vector<int64_t>& tokens) const {
  if (static_cast<int>(tokens.size()) != vocab_.id_length()) return std::nullopt;
  const int32_t node = trie_walk(tokens, tokens.size());
  if (node < 0 || nodes_[static_cast<size_t>(node)].item < 0) return std::nullopt;
  return nodes_[static_cast<size_t>(node)].item;
}

std::vector<int64_t> RecIdRegistry::valid_next_tokens(
    const std::vector<int64_t>& prefix) const {
  const int32_t node = trie_walk(prefix, prefix.size());
  std::vector<int64_t> out;
  if (node < 0) return out;
  for (const auto& [tok, child] : nodes_[static_cast<size_t>(node)].children)
    out.push_back(tok);
  return out;
}

std::string RecIdRegistry::collision_report() const {
  std::ostringstream os;
  os << "items          " << item_count() << "\n"
     << "semantic tuples " << std::accumulate(histogram_.begin(), histogram_.end(),
                                              int64_t{0},
                                              [](int64_t acc, const auto& e) {
                                                return acc + e.second;
                                              })
     << "\n"
     << "collision rate " << collision_rate_ << "\n"
     << "group size histogram:\n";
  for (const auto& [size, count] : histogram_)
    os << "  " << size << " -> " << count << "\n";
  return os.str();
}

void save_rec_ids(const std::string& path, const RecIdRegistry& registry) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write rec-ids: " + path);
  for (int64_t i = 0; i < registry.item_count(); ++i) {
    const RecId& id = registry.rec_id(i);
    os << i;
    for (int32_t c : id.semantic) os << '\t' << c;
    os << '\t' << id.pop << '\n';
  }
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace genrec
