#include "revealq/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "revealq/errors.hpp"

namespace revealq {
namespace {

double planar_distance(const Point& p, double x, double y) {
    return std::hypot(p[0] - x, p[1] - y);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double scene_parameter(const Scene& scene, const std::string& key) {
    for (const auto& [name, value] : scene.parameters) {
        if (name == key) {
            return value;
        }
    }
    throw ContractViolation("scene has no parameter '" + key + "'");
}

void require_pool_size(std::size_t pool_size) {
    if (pool_size < 2) {
        throw ConfigError("pool_size must be at least 2, got " + std::to_string(pool_size));
    }
}

std::vector<Point> tabletop_path(Rng& rng, const Scene& scene) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> wobble(0.0, 0.08);
    const Landmark& bowl = scene.landmark("bowl");

    const double sx = 0.1;
    const double sy = 0.5;
    double ex = 0.0;
    double ey = 0.0;
    if (unit(rng) < 1.0 / 3.0) {
        const double angle = 2.0 * std::numbers::pi * unit(rng);
        const double r = 0.15 * unit(rng);
        ex = clamp01(bowl.x + r * std::cos(angle));
        ey = clamp01(bowl.y + r * std::sin(angle));
    } else {
        ex = 0.4 + 0.6 * unit(rng);
        ey = unit(rng);
    }
    const double bulge = -0.35 + 0.7 * unit(rng);
    const double base_height = unit(rng);

    // Perpendicular to the start->end chord.
    const double len = std::max(1e-9, std::hypot(ex - sx, ey - sy));
    const double px = -(ey - sy) / len;
    const double py = (ex - sx) / len;

    std::vector<Point> path;
    path.reserve(tabletop::kWaypoints);
    for (std::size_t i = 0; i < tabletop::kWaypoints; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(tabletop::kWaypoints - 1);
        const double arch = bulge * std::sin(std::numbers::pi * t);
        path.push_back({clamp01(sx + t * (ex - sx) + arch * px), clamp01(sy + t * (ey - sy) + arch * py),
                        clamp01(base_height + wobble(rng))});
    }
    return path;
}

std::vector<Point> driving_path(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double progress = 0.3 + 0.7 * unit(rng);
    const double offset = -0.25 + 0.5 * unit(rng);
    const double swerve = -0.3 + 0.6 * unit(rng);
    std::vector<Point> path;
    path.reserve(driving::kWaypoints);
    for (std::size_t i = 0; i < driving::kWaypoints; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(driving::kWaypoints - 1);
        const double x = driving::kLaneCenter + offset * t + swerve * std::sin(std::numbers::pi * t);
        path.push_back({clamp01(x), progress * t});
    }
    return path;
}

FeatureVector raw_features_for(const std::string& name, const std::vector<Point>& waypoints,
                               const Scene& scene) {
    if (name == "tabletop") {
        return tabletop::raw_features(waypoints, scene);
    }
    if (name == "driving") {
        return driving::raw_features(waypoints, scene);
    }
    throw ContractViolation("environment '" + name + "' has no waypoint feature map");
}

}  // namespace

const Landmark& Scene::landmark(const std::string& name) const {
    for (const Landmark& l : landmarks) {
        if (l.name == name) {
            return l;
        }
    }
    throw ContractViolation("scene has no landmark '" + name + "'");
}

double FeatureScale::apply(std::size_t feature, double raw) const {
    const double span = hi[feature] - lo[feature];
    if (!(span > 0.0)) {
        return 0.0;
    }
    return clamp01((raw - lo[feature]) / span);
}

FeatureScale FeatureScale::fit(const std::vector<FeatureVector>& raw) {
    FeatureScale s;
    const std::size_t d = raw.front().size();
    s.lo.assign(d, std::numeric_limits<double>::infinity());
    s.hi.assign(d, -std::numeric_limits<double>::infinity());
    for (const FeatureVector& f : raw) {
        for (std::size_t c = 0; c < d; ++c) {
            s.lo[c] = std::min(s.lo[c], f[c]);
            s.hi[c] = std::max(s.hi[c], f[c]);
        }
    }
    return s;
}

FeatureVector Environment::features_of(const std::vector<Point>& waypoints) const {
    if (!scene || !scale) {
        throw ContractViolation("environment '" + name + "' has no geometry");
    }
    FeatureVector raw = raw_features_for(name, waypoints, *scene);
    for (std::size_t c = 0; c < raw.size(); ++c) {
        raw[c] = scale->apply(c, raw[c]);
    }
    return raw;
}

namespace tabletop {

Scene scene() {
    Scene s;
    s.landmarks = {{"ball", 0.35, 0.3, 0.05}, {"bowl", 0.75, 0.7, 0.08}, {"start", 0.1, 0.5, 0.03}};
    return s;
}

FeatureVector raw_features(const std::vector<Point>& waypoints, const Scene& scene) {
    if (waypoints.empty()) {
        throw ContractViolation("tabletop trajectory has no waypoints");
    }
    const Landmark& ball = scene.landmark("ball");
    const Landmark& bowl = scene.landmark("bowl");
    double height = 0.0;
    double ball_distance = std::numeric_limits<double>::infinity();
    for (const Point& p : waypoints) {
        if (p.size() != 3) {
            throw ContractViolation("tabletop waypoints are (x, y, height)");
        }
        height += p[2];
        ball_distance = std::min(ball_distance, planar_distance(p, ball.x, ball.y));
    }
    height /= static_cast<double>(waypoints.size());
    const double bowl_feature = 1.0 - std::clamp(planar_distance(waypoints.back(), bowl.x, bowl.y) / 0.5, 0.0, 1.0);
    return {height, ball_distance, bowl_feature};
}

}  // namespace tabletop

namespace driving {

Scene scene() {
    Scene s;
    s.landmarks = {{"obstacle", 0.62, 0.55, 0.06}};
    s.parameters = {{"road_left", 0.0}, {"road_right", 1.0}, {"road_length", 1.0}, {"lane_center", kLaneCenter}};
    return s;
}

FeatureVector raw_features(const std::vector<Point>& waypoints, const Scene& scene) {
    if (waypoints.empty()) {
        throw ContractViolation("driving trajectory has no waypoints");
    }
    const Landmark& obstacle = scene.landmark("obstacle");
    const double lane_center = scene_parameter(scene, "lane_center");
    double arc = 0.0;
    double clearance = std::numeric_limits<double>::infinity();
    double offset = 0.0;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        const Point& p = waypoints[i];
        if (p.size() < 2) {
            throw ContractViolation("driving waypoints are (x, y)");
        }
        if (i > 0) {
            arc += std::hypot(p[0] - waypoints[i - 1][0], p[1] - waypoints[i - 1][1]);
        }
        clearance = std::min(clearance, planar_distance(p, obstacle.x, obstacle.y));
        offset += std::fabs(p[0] - lane_center);
    }
    offset /= static_cast<double>(waypoints.size());
    return {arc, clearance, offset};
}

}  // namespace driving

Environment make_geometric_environment(const std::string& name, std::vector<std::vector<Point>> paths) {
    require_pool_size(paths.size());
    Environment env;
    env.name = name;
    if (name == "tabletop") {
        env.feature_names = {"height", "ball_distance", "bowl"};
        env.scene = tabletop::scene();
    } else if (name == "driving") {
        env.feature_names = {"speed", "obstacle_clearance", "lane_offset"};
        env.scene = driving::scene();
    } else {
        throw ConfigError("unknown geometric environment '" + name + "'");
    }
    std::vector<FeatureVector> raw;
    raw.reserve(paths.size());
    for (const auto& path : paths) {
        raw.push_back(raw_features_for(name, path, *env.scene));
    }
    env.scale = FeatureScale::fit(raw);
    env.pool.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        FeatureVector f = raw[i];
        for (std::size_t c = 0; c < f.size(); ++c) {
            f[c] = env.scale->apply(c, f[c]);
        }
        env.pool.emplace_back(static_cast<TrajectoryId>(i), std::move(f), std::move(paths[i]));
    }
    return env;
}

Environment build_tabletop(std::size_t pool_size, Rng& rng) {
    require_pool_size(pool_size);
    const Scene s = tabletop::scene();
    std::vector<std::vector<Point>> paths;
    paths.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) {
        paths.push_back(tabletop_path(rng, s));
    }
    return make_geometric_environment("tabletop", std::move(paths));
}

Environment build_driving(std::size_t pool_size, Rng& rng) {
    require_pool_size(pool_size);
    std::vector<std::vector<Point>> paths;
    paths.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) {
        paths.push_back(driving_path(rng));
    }
    return make_geometric_environment("driving", std::move(paths));
}

Environment build_synthetic(std::size_t d, std::size_t pool_size, Rng& rng) {
    if (d < 1) {
        throw ConfigError("synthetic environment needs d >= 1");
    }
    require_pool_size(pool_size);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<FeatureVector> raw(pool_size, FeatureVector(d));
    for (auto& f : raw) {
        for (double& v : f) {
            v = unit(rng);
        }
    }
    Environment env;
    env.name = "synthetic";
    for (std::size_t c = 0; c < d; ++c) {
        env.feature_names.push_back("f" + std::to_string(c));
    }
    const FeatureScale scale = FeatureScale::fit(raw);
    env.pool.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            raw[i][c] = scale.apply(c, raw[i][c]);
        }
        env.pool.emplace_back(static_cast<TrajectoryId>(i), std::move(raw[i]));
    }
    env.scale = scale;
    return env;
}

Environment build_environment(const std::string& name, std::size_t pool_size, std::size_t d, Rng& rng) {
    if (name == "tabletop") {
        return build_tabletop(pool_size, rng);
    }
    if (name == "driving") {
        return build_driving(pool_size, rng);
    }
    if (name == "synthetic") {
        return build_synthetic(d, pool_size, rng);
    }
    throw ConfigError("unknown environment '" + name + "' (expected tabletop, driving or synthetic)");
}

}  // namespace revealq
