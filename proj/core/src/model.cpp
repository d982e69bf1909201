#include "more3d/model.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "more3d/errors.hpp"

namespace more3d {

using json = nlohmann::json;

const char* head_mode_name(HeadMode mode) {
  return mode == HeadMode::kUnified ? "unified" : "separated";
}

HeadMode head_mode_from_name(const std::string& name) {
  if (name == "unified") return HeadMode::kUnified;
  if (name == "separated") return HeadMode::kSeparated;
  throw UsageError("unknown head mode '" + name +
                   "' (expected unified or separated)");
}

void ModelConfig::validate() const {
  if (d_point < 1 || d_model < 1) throw UsageError("feature widths must be >= 1");
  if (n_layers < 0) throw UsageError("n_layers must be >= 0");
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw UsageError("d_model " + std::to_string(d_model) +
                     " must be divisible by n_heads " + std::to_string(n_heads));
  }
  if (n_superpoints < 1) throw UsageError("n_superpoints must be >= 1");
  if (n_superpoints >= context_len) {
    throw UsageError("n_superpoints " + std::to_string(n_superpoints) +
                     " exceeds the context budget for point tokens (context_len " +
                     std::to_string(context_len) + ")");
  }
  if (n_classes != kNumClasses) {
    throw UsageError("n_classes must be " + std::to_string(kNumClasses));
  }
}

json ModelConfig::to_json() const {
  json j;
  j["d_point"] = d_point;
  j["d_model"] = d_model;
  j["n_layers"] = n_layers;
  j["n_heads"] = n_heads;
  j["context_len"] = context_len;
  j["n_superpoints"] = n_superpoints;
  j["k_neighbors"] = k_neighbors;
  j["n_classes"] = n_classes;
  j["head_mode"] = head_mode_name(head_mode);
  j["seed"] = seed;
  j["vocab_size"] = vocab_size;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig cfg;
  try {
    cfg.d_point = j.at("d_point").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.context_len = j.at("context_len").get<int>();
    cfg.n_superpoints = j.at("n_superpoints").get<int>();
    cfg.k_neighbors = j.at("k_neighbors").get<int>();
    cfg.n_classes = j.at("n_classes").get<int>();
    cfg.head_mode = head_mode_from_name(j.at("head_mode").get<std::string>());
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("model config error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SuperpointMap build_superpoints(const PointCloud& cloud, int n_superpoints) {
  const int n = static_cast<int>(cloud.size());
  if (n < n_superpoints) {
    throw RuntimeFault("cloud has " + std::to_string(n) +
                       " points, fewer than n_superpoints " +
                       std::to_string(n_superpoints) +
                       "; configure a smaller n_superpoints");
  }
  SuperpointMap sp;
  sp.seeds.reserve(static_cast<size_t>(n_superpoints));

  // Farthest point sampling from the first canonical point.
  std::vector<double> best_dist(static_cast<size_t>(n),
                                std::numeric_limits<double>::infinity());
  int current = 0;
  sp.seeds.push_back(0);
  for (int s = 1; s < n_superpoints; ++s) {
    const auto& seed_point = cloud.points[static_cast<size_t>(current)];
    int farthest = -1;
    double farthest_dist = -1.0;
    for (int p = 0; p < n; ++p) {
      const auto& point = cloud.points[static_cast<size_t>(p)];
      const double dx = point[0] - seed_point[0];
      const double dy = point[1] - seed_point[1];
      const double dz = point[2] - seed_point[2];
      const double d = dx * dx + dy * dy + dz * dz;
      auto& slot = best_dist[static_cast<size_t>(p)];
      if (d < slot) slot = d;
      if (slot > farthest_dist) {
        farthest_dist = slot;
        farthest = p;
      }
    }
    sp.seeds.push_back(farthest);
    current = farthest;
  }

  // Nearest-seed grouping, ties to the lowest seed index.
  sp.assignment.assign(static_cast<size_t>(n), 0);
  sp.members.assign(static_cast<size_t>(n_superpoints), {});
  for (int p = 0; p < n; ++p) {
    const auto& point = cloud.points[static_cast<size_t>(p)];
    int best_seed = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_superpoints; ++s) {
      const auto& seed_point =
          cloud.points[static_cast<size_t>(sp.seeds[static_cast<size_t>(s)])];
      const double dx = point[0] - seed_point[0];
      const double dy = point[1] - seed_point[1];
      const double dz = point[2] - seed_point[2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < best) {
        best = d;
        best_seed = s;
      }
    }
    sp.assignment[static_cast<size_t>(p)] = best_seed;
    sp.members[static_cast<size_t>(best_seed)].push_back(p);
  }

  // Duplicate coordinates can strand a seed; it keeps its own point.
  for (int s = 0; s < n_superpoints; ++s) {
    if (sp.members[static_cast<size_t>(s)].empty()) {
      sp.members[static_cast<size_t>(s)].push_back(sp.seeds[static_cast<size_t>(s)]);
      ++sp.fallback_superpoints;
    }
  }
  if (sp.fallback_superpoints > 0) {
    std::cerr << "note: " << sp.fallback_superpoints
              << " superpoint(s) fell back to their seed point\n";
  }

  sp.centroids.resize(static_cast<size_t>(n_superpoints));
  for (int s = 0; s < n_superpoints; ++s) {
    double sx = 0.0, sy = 0.0, sz = 0.0;
    const auto& members = sp.members[static_cast<size_t>(s)];
    for (int p : members) {
      sx += cloud.points[static_cast<size_t>(p)][0];
      sy += cloud.points[static_cast<size_t>(p)][1];
      sz += cloud.points[static_cast<size_t>(p)][2];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    sp.centroids[static_cast<size_t>(s)] = {sx * inv, sy * inv, sz * inv};
  }
  return sp;
}

}  // namespace more3d
