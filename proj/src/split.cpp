#include "neolus/split.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neolus/csv.hpp"
#include "neolus/error.hpp"
#include "neolus/rng.hpp"

namespace neolus {

namespace {

double parse_fraction(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !(v >= 0.0) || v > 1.0)
    throw ArgumentError("invalid holdout fraction '" + s + "'");
  return v;
}

Partition parse_partition(const std::string& s) {
  if (s == "train") return Partition::Train;
  if (s == "val") return Partition::Val;
  if (s == "test") return Partition::Test;
  throw LoadError("unknown partition '" + s + "'");
}

}  // namespace

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
  }
  return "?";
}

SplitScheme parse_scheme(const std::string& text) {
  if (text.rfind("kfold:", 0) == 0) {
    const std::string n = text.substr(6);
    int k = 0;
    auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), k);
    if (ec != std::errc{} || p != n.data() + n.size() || k < 2)
      throw ArgumentError("invalid k-fold scheme '" + text + "' (need k >= 2)");
    return KFoldScheme{k};
  }
  if (text.rfind("holdout:", 0) == 0) {
    std::vector<double> parts;
    std::stringstream ss(text.substr(8));
    std::string item;
    while (std::getline(ss, item, '/')) parts.push_back(parse_fraction(item));
    HoldoutScheme h;
    if (parts.size() == 2) {
      h = {parts[0], 0.0, parts[1]};
    } else if (parts.size() == 3) {
      h = {parts[0], parts[1], parts[2]};
    } else {
      throw ArgumentError("holdout scheme needs 2 or 3 fractions: '" + text + "'");
    }
    const double sum = h.train + h.val + h.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("holdout fractions must sum to 1: '" + text + "'");
    return h;
  }
  throw ArgumentError("unknown split scheme '" + text + "'");
}

std::string to_string(const SplitScheme& scheme) {
  if (const auto* k = std::get_if<KFoldScheme>(&scheme)) return "kfold:" + std::to_string(k->k);
  const auto& h = std::get<HoldoutScheme>(scheme);
  return "holdout:" + csv::format_double(h.train) + "/" + csv::format_double(h.val) + "/" +
         csv::format_double(h.test);
}

SplitPlan make_split(const Manifest& manifest, std::uint64_t seed, const SplitScheme& scheme) {
  if (manifest.empty()) throw ArgumentError("cannot split an empty manifest");

  std::map<std::pair<Center, Disease>, std::vector<std::string>> strata;
  for (const auto& p : manifest.patients()) strata[{p.center, p.disease}].push_back(p.patient_id);

  std::vector<double> quota;
  if (const auto* k = std::get_if<KFoldScheme>(&scheme)) {
    quota.assign(static_cast<std::size_t>(k->k), 1.0 / k->k);
  } else {
    const auto& h = std::get<HoldoutScheme>(scheme);
    quota = {h.train, h.val, h.test};
  }

  // Deterministic order: strata sorted by key, patient ids sorted before the seeded shuffle.
  std::vector<std::string> order;
  std::uint64_t stratum_key = 0;
  for (auto& [key, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, stratum_key++, 0x5eed));
    rng.shuffle(std::span<std::string>(ids));
    order.insert(order.end(), ids.begin(), ids.end());
  }

  // Largest-deficit dealing: slot j goes to the partition furthest below its running quota.
  std::vector<double> assigned(quota.size(), 0.0);
  SplitPlan plan;
  plan.seed = seed;
  plan.scheme = scheme;
  for (std::size_t j = 0; j < order.size(); ++j) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t q = 0; q < quota.size(); ++q) {
      if (quota[q] <= 0.0) continue;
      const double deficit = quota[q] * static_cast<double>(j + 1) - assigned[q];
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = q;
      }
    }
    assigned[best] += 1.0;
    if (plan.is_kfold()) {
      plan.folds[order[j]] = static_cast<int>(best);
    } else {
      plan.holdout[order[j]] = static_cast<Partition>(best);
    }
  }
  return plan;
}

PartitionSets resolve_partitions(const SplitPlan& plan, int fold) {
  PartitionSets sets;
  if (plan.is_kfold()) {
    const int k = std::get<KFoldScheme>(plan.scheme).k;
    if (fold < 0 || fold >= k) throw ConfigError("fold " + std::to_string(fold) + " outside [0, k)");
    const int val_fold = (fold + 1) % k;
    for (const auto& [pid, f] : plan.folds) {
      if (f == fold) {
        sets.test.insert(pid);
      } else if (f == val_fold) {
        sets.val.insert(pid);
      } else {
        sets.train.insert(pid);
      }
    }
  } else {
    for (const auto& [pid, p] : plan.holdout) {
      switch (p) {
        case Partition::Train: sets.train.insert(pid); break;
        case Partition::Val: sets.val.insert(pid); break;
        case Partition::Test: sets.test.insert(pid); break;
      }
    }
  }
  return sets;
}

std::string split_to_json(const SplitPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["scheme"] = to_string(plan.scheme);
  auto& a = j["assignments"] = nlohmann::ordered_json::object();
  if (plan.is_kfold()) {
    for (const auto& [pid, f] : plan.folds) a[pid] = f;
  } else {
    for (const auto& [pid, p] : plan.holdout) a[pid] = std::string(to_string(p));
  }
  return j.dump(2) + "\n";
}

SplitPlan split_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("split plan is not valid JSON: ") + e.what());
  }
  SplitPlan plan;
  try {
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
    for (const auto& [pid, v] : j.at("assignments").items()) {
      if (plan.is_kfold()) {
        const int f = v.get<int>();
        if (f < 0 || f >= std::get<KFoldScheme>(plan.scheme).k)
          throw LoadError("fold index out of range for patient '" + pid + "'");
        plan.folds[pid] = f;
      } else {
        plan.holdout[pid] = parse_partition(v.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("split plan schema violation: ") + e.what());
  } catch (const ArgumentError& e) {
    throw LoadError(e.what());
  }
  return plan;
}

void save_split(const SplitPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write split plan '" + path + "'");
  out << split_to_json(plan);
}

SplitPlan load_split(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open split plan '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return split_from_json(ss.str());
}

}  // namespace neolus
