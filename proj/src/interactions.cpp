// Copyright 2026 The drmrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drmrec/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace drmrec {

namespace fs = std::filesystem;

InputFormat parse_input_format(std::string_view name) {
  if (name == "pair-list" || name == "pairs" || name == "tsv") return InputFormat::kPairList;
  if (name == "playlist-json" || name == "json") return InputFormat::kPlaylistJson;
  throw ConfigError(fmt::format("unknown input format '{}' (expected pair-list or playlist-json)", name));
}

namespace {

std::shared_ptr<const IdIndex> numeric_index(std::size_t num_users, std::size_t num_items) {
  auto index = std::make_shared<IdIndex>();
  index->users.reserve(num_users);
  for (std::size_t u = 0; u < num_users; ++u) index->users.push_back(std::to_string(u));
  index->items.reserve(num_items);
  for (std::size_t i = 0; i < num_items; ++i) index->items.push_back(std::to_string(i));
  return index;
}

}  // namespace

InteractionMatrix::InteractionMatrix(std::size_t num_items, std::vector<std::vector<ItemId>> lists,
                                     std::shared_ptr<const IdIndex> index)
    : num_items_(num_items), lists_(std::move(lists)), index_(std::move(index)) {
  if (!index_) index_ = numeric_index(lists_.size(), num_items_);
  if (index_->users.size() != lists_.size() || index_->items.size() != num_items_)
    throw std::invalid_argument("id index does not match matrix shape");
  for (auto& list : lists_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (!list.empty() && list.back() >= num_items_)
      throw std::out_of_range(fmt::format("item id {} outside [0, {})", list.back(), num_items_));
    nnz_ += list.size();
  }
}

bool InteractionMatrix::contains(UserId u, ItemId i) const {
  const auto& list = lists_[u];
  return std::binary_search(list.begin(), list.end(), i);
}

std::vector<UserId> InteractionMatrix::empty_users() const {
  std::vector<UserId> out;
  for (UserId u = 0; u < lists_.size(); ++u)
    if (lists_[u].empty()) out.push_back(u);
  return out;
}

InteractionMatrix InteractionMatrix::with_lists(std::vector<std::vector<ItemId>> lists) const {
  return InteractionMatrix(num_items_, std::move(lists), index_);
}

InteractionBuilder::InteractionBuilder(const IdIndex& frozen) : frozen_(true), index_(frozen) {
  for (UserId u = 0; u < index_.users.size(); ++u) user_ids_.emplace(index_.users[u], u);
  for (ItemId i = 0; i < index_.items.size(); ++i) item_ids_.emplace(index_.items[i], i);
  lists_.resize(index_.users.size());
}

UserId InteractionBuilder::user(std::string_view name) {
  auto it = user_ids_.find(std::string(name));
  if (it != user_ids_.end()) return it->second;
  if (frozen_) throw ParseError(fmt::format("unknown user id '{}'", name));
  const auto id = static_cast<UserId>(index_.users.size());
  index_.users.emplace_back(name);
  user_ids_.emplace(std::string(name), id);
  lists_.emplace_back();
  return id;
}

ItemId InteractionBuilder::item(std::string_view name) {
  auto it = item_ids_.find(std::string(name));
  if (it != item_ids_.end()) return it->second;
  if (frozen_) throw ParseError(fmt::format("unknown item id '{}'", name));
  const auto id = static_cast<ItemId>(index_.items.size());
  index_.items.emplace_back(name);
  item_ids_.emplace(std::string(name), id);
  return id;
}

void InteractionBuilder::add(std::string_view user_name, std::string_view item_name) {
  const UserId u = user(user_name);
  const ItemId i = item(item_name);
  lists_[u].push_back(i);
}

InteractionMatrix InteractionBuilder::build() && {
  const std::size_t n = index_.items.size();
  return InteractionMatrix(n, std::move(lists_), std::make_shared<const IdIndex>(std::move(index_)));
}

InteractionMatrix parse_pair_list(std::istream& in, InteractionBuilder builder) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(fmt::format("line {}: expected 'user<TAB>item'", line_no), line_no);
    }
    try {
      builder.add(std::string_view(line).substr(0, tab), std::string_view(line).substr(tab + 1));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("line {}: {}", line_no, e.what()), line_no);
    }
  }
  return std::move(builder).build();
}

namespace {

std::string json_token(const nlohmann::json& v, std::size_t record, const char* field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  throw ParseError(fmt::format("record {}: '{}' must be a string or integer id", record, field));
}

void check_token(const std::string& token, std::size_t record) {
  if (token.empty() || token.find_first_of("\t\n\r") != std::string::npos)
    throw ParseError(fmt::format("record {}: id '{}' is empty or contains tab/newline", record, token));
}

}  // namespace

std::vector<PlaylistRecord> parse_playlist_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("invalid JSON at byte {}: {}", e.byte, e.what()));
  }
  if (!doc.is_array()) throw ParseError("playlist JSON must be an array of records");

  std::vector<PlaylistRecord> records;
  records.reserve(doc.size());
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    if (!obj.is_object()) throw ParseError(fmt::format("record {}: not an object", r));
    if (!obj.contains("id")) throw ParseError(fmt::format("record {}: missing 'id'", r));
    if (!obj.contains("songs") || !obj["songs"].is_array())
      throw ParseError(fmt::format("record {}: missing 'songs' array", r));
    PlaylistRecord rec;
    rec.id = json_token(obj["id"], r, "id");
    check_token(rec.id, r);
    for (const auto& song : obj["songs"]) {
      rec.songs.push_back(json_token(song, r, "songs"));
      check_token(rec.songs.back(), r);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

InteractionMatrix convert_playlists(std::span<const PlaylistRecord> records) {
  InteractionBuilder builder;
  for (const auto& rec : records) {
    const UserId u = builder.user(rec.id);
    for (const auto& song : rec.songs) builder.add(u, builder.item(song));
  }
  return std::move(builder).build();
}

InteractionMatrix load_interactions(const fs::path& path, InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure(fmt::format("cannot open '{}'", path.string()));
  InteractionMatrix m;
  try {
    if (format == InputFormat::kPairList) {
      m = parse_pair_list(in);
    } else {
      std::ostringstream buf;
      buf << in.rdbuf();
      const auto records = parse_playlist_json(buf.str());
      m = convert_playlists(records);
    }
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), e.line());
  }
  if (m.num_interactions() == 0)
    throw EmptyDatasetError(fmt::format("'{}' contains no interactions", path.string()));
  return m;
}

void write_pair_list(std::ostream& out, const InteractionMatrix& m) {
  const auto& index = m.index();
  std::vector<const std::string*> names;
  for (UserId u = 0; u < m.num_users(); ++u) {
    names.clear();
    for (ItemId i : m.items(u)) names.push_back(&index.items[i]);
    std::sort(names.begin(), names.end(), [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* name : names) out << index.users[u] << '\t' << *name << '\n';
  }
}

void SplitSpec::validate() const {
  for (double f : {train, validation, test})
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
  if (std::abs(train + validation + test - 1.0) > 1e-9)
    throw ConfigError(fmt::format("split fractions sum to {}, expected 1", train + validation + test));
}

Splits split(const InteractionMatrix& m, const SplitSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_users = m.num_users();
  std::vector<std::vector<ItemId>> tr(n_users), va(n_users), te(n_users);
  const double cut_train = spec.train;
  const double cut_val = spec.train + spec.validation;
  for (UserId u = 0; u < n_users; ++u) {
    for (ItemId i : m.items(u)) {
      const double x = rng.uniform01();
      if (x < cut_train)
        tr[u].push_back(i);
      else if (x < cut_val)
        va[u].push_back(i);
      else
        te[u].push_back(i);
    }
  }
  return Splits{m.with_lists(std::move(tr)), m.with_lists(std::move(va)), m.with_lists(std::move(te))};
}

std::vector<UserId> eligible_users(const InteractionMatrix& train, const InteractionMatrix& test,
                                   std::size_t min_train) {
  if (train.num_users() != test.num_users())
    throw std::invalid_argument("train and test do not share an index space");
  std::vector<UserId> out;
  for (UserId u = 0; u < train.num_users(); ++u)
    if (train.items(u).size() >= min_train && !test.items(u).empty()) out.push_back(u);
  return out;
}

InteractionMatrix merge(const InteractionMatrix& a, const InteractionMatrix& b) {
  if (a.num_users() != b.num_users() || a.num_items() != b.num_items())
    throw std::invalid_argument("merge requires a shared index space");
  std::vector<std::vector<ItemId>> lists(a.num_users());
  for (UserId u = 0; u < a.num_users(); ++u) {
    lists[u].assign(a.items(u).begin(), a.items(u).end());
    lists[u].insert(lists[u].end(), b.items(u).begin(), b.items(u).end());
  }
  return a.with_lists(std::move(lists));
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw std::ios_base::failure(fmt::format("write failed for '{}'", path.string()));
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string to_pair_list(const InteractionMatrix& m) {
  std::ostringstream out;
  write_pair_list(out, m);
  return out.str();
}

}  // namespace

void save_split(const fs::path& dir, const Splits& splits, const SplitSpec& spec) {
  fs::create_directories(dir);
  const auto& index = splits.train.index();
  std::string users, items;
  for (const auto& u : index.users) users += u + '\n';
  for (const auto& i : index.items) items += i + '\n';
  write_file(dir / "users.txt", users);
  write_file(dir / "items.txt", items);
  write_file(dir / "train.tsv", to_pair_list(splits.train));
  write_file(dir / "validation.tsv", to_pair_list(splits.validation));
  write_file(dir / "test.tsv", to_pair_list(splits.test));
  write_file(dir / "manifest.txt",
             fmt::format("seed = {}\ntrain_fraction = {:.17g}\nvalidation_fraction = {:.17g}\n"
                         "test_fraction = {:.17g}\nnum_users = {}\nnum_items = {}\n"
                         "train_interactions = {}\nvalidation_interactions = {}\n"
                         "test_interactions = {}\n",
                         spec.seed, spec.train, spec.validation, spec.test, index.users.size(),
                         index.items.size(), splits.train.num_interactions(),
                         splits.validation.num_interactions(), splits.test.num_interactions()));
}

LoadedSplit load_split(const fs::path& dir) {
  IdIndex index;
  index.users = read_lines(dir / "users.txt");
  index.items = read_lines(dir / "items.txt");

  std::unordered_map<std::string, std::string> manifest;
  for (const auto& line : read_lines(dir / "manifest.txt")) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    manifest[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto field = [&](const char* key) -> const std::string& {
    auto it = manifest.find(key);
    if (it == manifest.end()) throw ParseError(fmt::format("manifest is missing '{}'", key));
    return it->second;
  };

  LoadedSplit out;
  out.spec.seed = std::stoull(field("seed"));
  out.spec.train = std::stod(field("train_fraction"));
  out.spec.validation = std::stod(field("validation_fraction"));
  out.spec.test = std::stod(field("test_fraction"));
  if (std::stoull(field("num_users")) != index.users.size() ||
      std::stoull(field("num_items")) != index.items.size())
    throw ParseError("manifest shape does not match users.txt/items.txt");

  auto load_part = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw std::ios_base::failure(fmt::format("cannot open '{}'", (dir / name).string()));
    return parse_pair_list(in, InteractionBuilder(index));
  };
  out.splits.train = load_part("train.tsv");
  // One shared index object for all three parts.
  const auto shared = out.splits.train.shared_index();
  auto rebase = [&](const InteractionMatrix& m) {
    std::vector<std::vector<ItemId>> lists(m.num_users());
    for (UserId u = 0; u < m.num_users(); ++u) lists[u].assign(m.items(u).begin(), m.items(u).end());
    return InteractionMatrix(m.num_items(), std::move(lists), shared);
  };
  out.splits.validation = rebase(load_part("validation.tsv"));
  out.splits.test = rebase(load_part("test.tsv"));
  return out;
}

InteractionMatrix make_synthetic(const SyntheticSpec& spec) {
  if (spec.positives_per_user > spec.num_items)
    throw ConfigError("positives_per_user exceeds num_items");
  Rng rng(spec.seed);
  DenseMatrix users(spec.num_users, spec.rank), items(spec.num_items, spec.rank);
  for (double& x : users.data()) x = rng.normal();
  for (double& x : items.data()) x = rng.normal();

  std::vector<std::vector<ItemId>> lists(spec.num_users);
  std::vector<std::pair<double, ItemId>> scored(spec.num_items);
  for (UserId u = 0; u < spec.num_users; ++u) {
    for (ItemId i = 0; i < spec.num_items; ++i) scored[i] = {dot(users.row(u), items.row(i)), i};
    std::partial_sort(scored.begin(), scored.begin() + spec.positives_per_user, scored.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    for (std::size_t k = 0; k < spec.positives_per_user; ++k) lists[u].push_back(scored[k].second);
  }
  return InteractionMatrix(spec.num_items, std::move(lists));
}

}  // namespace drmrec
