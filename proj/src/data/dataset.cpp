#include "genrec/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace genrec {

int64_t InteractionDataset::interaction_count() const {
  int64_t n = 0;
  for (int64_t u = 0; u < user_count; ++u)
    n += static_cast<int64_t>(train_items[u].size() + valid_items[u].size() +
                              test_items[u].size());
  return n;
}

int64_t InteractionDataset::train_count() const {
  int64_t n = 0;
  for (const auto& v : train_items) n += static_cast<int64_t>(v.size());
  return n;
}

double InteractionDataset::density() const {
  if (user_count == 0 || item_count == 0) return 0.0;
  return static_cast<double>(interaction_count()) /
         (static_cast<double>(user_count) * static_cast<double>(item_count));
}

InteractionDataset InteractionDataset::from_pairs(
    int64_t user_count, int64_t item_count,
    const std::vector<std::pair<int32_t, int32_t>>& pairs, uint64_t seed) {
  InteractionDataset ds;
  ds.user_count = user_count;
  ds.item_count = item_count;
  ds.train_items.resize(user_count);
  ds.valid_items.resize(user_count);
  ds.test_items.resize(user_count);
  ds.popularity.assign(item_count, 0);

  std::vector<std::vector<int32_t>> per_user(user_count);
  std::unordered_set<int64_t> seen;
  seen.reserve(pairs.size() * 2);
  for (const auto& [u, i] : pairs) {
    if (u < 0 || u >= user_count || i < 0 || i >= item_count)
      throw DataError("interaction (" + std::to_string(u) + "," +
                      std::to_string(i) + ") out of range for " +
                      std::to_string(user_count) + " users x " +
                      std::to_string(item_count) + " items");
    const int64_t key = static_cast<int64_t>(u) * item_count + i;
    if (!seen.insert(key).second)
      throw DataError("duplicate interaction pair (" + std::to_string(u) + "," +
                      std::to_string(i) + ")");
    per_user[u].push_back(i);
  }

  Rng rng(seed);
  for (int64_t u = 0; u < user_count; ++u) {
    auto& items = per_user[u];
    if (items.empty()) continue;
    // fork keyed by user index so the split does not depend on how other
    // users' interactions interleave in the input file
    Rng ur = rng.fork(static_cast<uint64_t>(u) + 1);
    std::sort(items.begin(), items.end());
    ur.shuffle(items);
    const int64_t n = static_cast<int64_t>(items.size());
    int64_t n_test = 0, n_valid = 0;
    if (n >= 3) {
      n_test = std::max<int64_t>(1, n / 10);
      n_valid = std::max<int64_t>(1, n / 10);
    }
    for (int64_t k = 0; k < n; ++k) {
      if (k < n_test) ds.test_items[u].push_back(items[k]);
      else if (k < n_test + n_valid) ds.valid_items[u].push_back(items[k]);
      else ds.train_items[u].push_back(items[k]);
    }
    std::sort(ds.train_items[u].begin(), ds.train_items[u].end());
    std::sort(ds.valid_items[u].begin(), ds.valid_items[u].end());
    std::sort(ds.test_items[u].begin(), ds.test_items[u].end());
    for (int32_t i : ds.train_items[u]) ds.popularity[i]++;
  }
  return ds;
}

std::string stats_report(const InteractionDataset& ds) {
  std::ostringstream os;
  int64_t nv = 0, nt = 0;
  for (const auto& v : ds.valid_items) nv += static_cast<int64_t>(v.size());
  for (const auto& v : ds.test_items) nt += static_cast<int64_t>(v.size());
  os << "users        " << ds.user_count << "\n"
     << "items        " << ds.item_count << "\n"
     << "interactions " << ds.interaction_count() << "\n"
     << "density      " << ds.density() << "\n"
     << "train/valid/test " << ds.train_count() << "/" << nv << "/" << nt << "\n";
  return os.str();
}

LoadedInteractions load_interactions(const std::string& path, uint64_t seed) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open interactions file: " + path);

  LoadedInteractions out;
  std::unordered_map<std::string, int32_t> user_index, item_index;
  std::vector<std::pair<int32_t, int32_t>> pairs;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `user<TAB>item`, got: " + line);
    std::string u = line.substr(0, tab);
    std::string i = line.substr(tab + 1);
    if (!i.empty() && i.back() == '\r') i.pop_back();
    if (i.empty())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected `user<TAB>item`, got: " + line);
    auto [uit, unew] = user_index.try_emplace(
        u, static_cast<int32_t>(out.user_ids.size()));
    if (unew) out.user_ids.push_back(u);
    auto [iit, inew] = item_index.try_emplace(
        i, static_cast<int32_t>(out.item_ids.size()));
    if (inew) out.item_ids.push_back(i);
    pairs.emplace_back(uit->second, iit->second);
  }

  // surface duplicates with their position before from_pairs re-checks
  std::unordered_set<int64_t> seen;
  const int64_t items = static_cast<int64_t>(out.item_ids.size());
  for (size_t k = 0; k < pairs.size(); ++k) {
    const int64_t key = static_cast<int64_t>(pairs[k].first) * items + pairs[k].second;
    if (!seen.insert(key).second)
      throw DataError(path + ": duplicate pair `" +
                      out.user_ids[pairs[k].first] + "\t" +
                      out.item_ids[pairs[k].second] + "` (occurrence " +
                      std::to_string(k + 1) + " of the pair list)");
  }

  out.dataset = InteractionDataset::from_pairs(
      static_cast<int64_t>(out.user_ids.size()), items, pairs, seed);
  return out;
}

void save_interactions(const std::string& path,
                       const std::vector<std::pair<int32_t, int32_t>>& pairs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write interactions file: " + path);
  for (const auto& [u, i] : pairs) os << u << '\t' << i << '\n';
  if (!os) throw DataError("write failed: " + path);
}

void save_id_map(const std::string& path, const std::vector<std::string>& ids) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write id map: " + path);
  for (size_t k = 0; k < ids.size(); ++k) os << k << '\t' << ids[k] << '\n';
}

BipartiteGraph build_graph(const InteractionDataset& ds) {
  BipartiteGraph g;
  g.user_adj.resize(ds.user_count);
  g.item_adj.resize(ds.item_count);
  for (int64_t u = 0; u < ds.user_count; ++u) {
    for (int32_t i : ds.train_items[u]) {
      g.user_adj[u].push_back(i);
      g.item_adj[i].push_back(static_cast<int32_t>(u));
    }
  }
  return g;
}

}  // namespace genrec
