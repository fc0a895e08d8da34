#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "neolus/manifest.hpp"

namespace neolus {

enum class Partition { Train, Val, Test };

struct HoldoutScheme {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct KFoldScheme {
  int k = 5;
};

using SplitScheme = std::variant<HoldoutScheme, KFoldScheme>;

/// "kfold:5" or "holdout:0.7/0.15/0.15" (a two-part holdout means no validation partition).
SplitScheme parse_scheme(const std::string& text);
std::string to_string(const SplitScheme& scheme);
std::string_view to_string(Partition p);

/// Patient-level assignment. Holdout plans map to Partition, k-fold plans to a fold index.
struct SplitPlan {
  std::uint64_t seed = 0;
  SplitScheme scheme = KFoldScheme{};
  std::map<std::string, Partition> holdout;
  std::map<std::string, int> folds;

  bool is_kfold() const { return std::holds_alternative<KFoldScheme>(scheme); }
  std::size_t patient_count() const { return is_kfold() ? folds.size() : holdout.size(); }
};

/// Stratified on (center, disease). Patients are shuffled within each stratum and then dealt
/// across partitions in one continuous sequence, so strata smaller than the number of partitions
/// are merged with their neighbours instead of collapsing into a single partition.
SplitPlan make_split(const Manifest& manifest, std::uint64_t seed, const SplitScheme& scheme);

/// Patient sets for one experiment. For k-fold, `fold` is the test fold and fold+1 (mod k) is
/// validation; the remaining folds train.
struct PartitionSets {
  std::set<std::string> train;
  std::set<std::string> val;
  std::set<std::string> test;
};

PartitionSets resolve_partitions(const SplitPlan& plan, int fold = 0);

std::string split_to_json(const SplitPlan& plan);
SplitPlan split_from_json(const std::string& text);
void save_split(const SplitPlan& plan, const std::string& path);
SplitPlan load_split(const std::string& path);

}  // namespace neolus
