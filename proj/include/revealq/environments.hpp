#pragma once

// Trajectory pools for the built-in environments. Features are analytic
// functions of waypoint polylines and a fixed scene, min-max normalized over
// the generated pool. The normalization is frozen with the environment, so
// features_of() reproduces stored features exactly.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "revealq/core.hpp"
#include "revealq/random.hpp"

namespace revealq {

struct Landmark {
    std::string name;
    double x = 0.0;
    double y = 0.0;
    double radius = 0.0;
};

struct Scene {
    std::vector<Landmark> landmarks;
    // Extra scalar layout values the renderer needs (road bounds, lane center).
    std::vector<std::pair<std::string, double>> parameters;

    const Landmark& landmark(const std::string& name) const;
};

// Per-feature affine map raw -> (raw - lo) / (hi - lo); a zero span maps to 0.
struct FeatureScale {
    std::vector<double> lo;
    std::vector<double> hi;

    double apply(std::size_t feature, double raw) const;
    static FeatureScale fit(const std::vector<FeatureVector>& raw);
};

struct Environment {
    std::string name;
    std::vector<std::string> feature_names;
    std::vector<Trajectory> pool;
    std::optional<Scene> scene;
    std::optional<FeatureScale> scale;

    std::size_t dim() const { return feature_names.size(); }

    // Feature map over waypoints, including the frozen normalization. Throws
    // ContractViolation for environments without geometry.
    FeatureVector features_of(const std::vector<Point>& waypoints) const;
};

namespace tabletop {
inline constexpr std::size_t kWaypoints = 5;
Scene scene();
// height, ball distance, bowl proximity (before normalization).
FeatureVector raw_features(const std::vector<Point>& waypoints, const Scene& scene);
}  // namespace tabletop

namespace driving {
inline constexpr std::size_t kWaypoints = 10;
inline constexpr double kLaneCenter = 0.5;
Scene scene();
// speed (arc length), obstacle clearance, lane offset (before normalization).
FeatureVector raw_features(const std::vector<Point>& waypoints, const Scene& scene);
}  // namespace driving

// Normalizes raw features over the given waypoint sets and assembles an
// environment. Trajectory ids are the positions in `paths`.
Environment make_geometric_environment(const std::string& name, std::vector<std::vector<Point>> paths);

Environment build_tabletop(std::size_t pool_size, Rng& rng);
Environment build_driving(std::size_t pool_size, Rng& rng);
Environment build_synthetic(std::size_t d, std::size_t pool_size, Rng& rng);

// Dispatch by name: "tabletop", "driving" or "synthetic". `d` is used by
// synthetic only.
Environment build_environment(const std::string& name, std::size_t pool_size, std::size_t d, Rng& rng);

}  // namespace revealq
