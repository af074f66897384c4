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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "drmrec/common.hpp"

namespace drmrec {

enum class InputFormat { kPairList, kPlaylistJson };

InputFormat parse_input_format(std::string_view name);

// External ids in internal-id order. Matrices produced by one split share it.
struct IdIndex {
  std::vector<std::string> users;
  std::vector<std::string> items;
};

// Binary implicit feedback over M users x N items, stored as one sorted,
// duplicate-free item list per user.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;

  // Sorts and deduplicates each list. When `index` is null, ids are named by
  // their decimal value.
  InteractionMatrix(std::size_t num_items, std::vector<std::vector<ItemId>> lists,
                    std::shared_ptr<const IdIndex> index = nullptr);

  std::size_t num_users() const { return lists_.size(); }
  std::size_t num_items() const { return num_items_; }
  std::size_t num_interactions() const { return nnz_; }

  std::span<const ItemId> items(UserId u) const { return lists_[u]; }
  bool contains(UserId u, ItemId i) const;

  const IdIndex& index() const { return *index_; }
  const std::shared_ptr<const IdIndex>& shared_index() const { return index_; }

  // Users retained in the index space with an empty positive set.
  std::vector<UserId> empty_users() const;

  // Matrix over the same index space with the given per-user lists.
  InteractionMatrix with_lists(std::vector<std::vector<ItemId>> lists) const;

  friend bool operator==(const InteractionMatrix& a, const InteractionMatrix& b) {
    return a.num_items_ == b.num_items_ && a.lists_ == b.lists_;
  }

 private:
  std::size_t num_items_ = 0;
  std::size_t nnz_ = 0;
  std::vector<std::vector<ItemId>> lists_;
  std::shared_ptr<const IdIndex> index_;
};

// Assigns dense ids to external tokens in order of first appearance.
class InteractionBuilder {
 public:
  InteractionBuilder() = default;
  // Starts from a fixed index; unknown tokens are then rejected.
  explicit InteractionBuilder(const IdIndex& frozen);

  UserId user(std::string_view name);
  ItemId item(std::string_view name);
  void add(std::string_view user_name, std::string_view item_name);
  void add(UserId u, ItemId i) { lists_[u].push_back(i); }

  bool frozen() const { return frozen_; }
  InteractionMatrix build() &&;

 private:
  bool frozen_ = false;
  IdIndex index_;
  std::unordered_map<std::string, UserId> user_ids_;
  std::unordered_map<std::string, ItemId> item_ids_;
  std::vector<std::vector<ItemId>> lists_;
};

struct PlaylistRecord {
  std::string id;
  std::vector<std::string> songs;
};

// `user<TAB>item` per line; '#' starts a comment line; blank lines skipped.
// Throws ParseError carrying the 1-based line number.
InteractionMatrix parse_pair_list(std::istream& in, InteractionBuilder builder = {});

// JSON array of objects with `id` and `songs`; other fields ignored.
std::vector<PlaylistRecord> parse_playlist_json(std::string_view text);

// One user per playlist, one interaction per (playlist, song) membership.
InteractionMatrix convert_playlists(std::span<const PlaylistRecord> records);

// Reads a file in either format. Throws ParseError on malformed content and
// EmptyDatasetError when no interactions are found.
InteractionMatrix load_interactions(const std::filesystem::path& path, InputFormat format);

// Canonical pair-list: users in internal order, each user's items ordered by
// external id, so writing a re-read file reproduces it byte for byte.
void write_pair_list(std::ostream& out, const InteractionMatrix& m);

struct SplitSpec {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

struct Splits {
  InteractionMatrix train;
  InteractionMatrix validation;
  InteractionMatrix test;
};

// Assigns every interaction to exactly one part by a seeded uniform draw.
Splits split(const InteractionMatrix& m, const SplitSpec& spec);

// Users with at least `min_train` train interactions and one test interaction.
std::vector<UserId> eligible_users(const InteractionMatrix& train, const InteractionMatrix& test,
                                   std::size_t min_train);

// Union of two matrices over one index space.
InteractionMatrix merge(const InteractionMatrix& a, const InteractionMatrix& b);

// Writes users.txt, items.txt, train.tsv, validation.tsv, test.tsv and
// manifest.txt under `dir`.
void save_split(const std::filesystem::path& dir, const Splits& splits, const SplitSpec& spec);

struct LoadedSplit {
  Splits splits;
  SplitSpec spec;
};
LoadedSplit load_split(const std::filesystem::path& dir);

// Implicit feedback drawn from a low-rank ground truth: Gaussian user/item
// factors of the given rank, and each user's `positives_per_user` top-scored
// items become positives.
struct SyntheticSpec {
  std::size_t num_users = 200;
  std::size_t num_items = 300;
  std::size_t rank = 8;
  std::size_t positives_per_user = 20;
  std::uint64_t seed = 0;
};
InteractionMatrix make_synthetic(const SyntheticSpec& spec);

}  // namespace drmrec
