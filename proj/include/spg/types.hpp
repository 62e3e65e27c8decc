#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spg {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Broad failure categories; the CLI maps them onto distinct exit codes.
enum class ErrorKind {
    Validation,  // bad inputs, schema violations, unsatisfied preconditions
    Numerical,   // accuracy targets or certificates not met, build horizons
    Threshold,   // counting function evaluated too close to a jump
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }
[[noreturn]] inline void fail_numerical(const std::string& msg) { throw Error(ErrorKind::Numerical, msg); }
[[noreturn]] inline void fail_threshold(const std::string& msg) { throw Error(ErrorKind::Threshold, msg); }

/// Lattice site. Two-dimensional sites keep z == 0; coordinates are wide
/// because sparse sets on the square lattice recede to very large radii.
struct GridPoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t z = 0;

    friend bool operator==(const GridPoint&, const GridPoint&) = default;
    friend auto operator<=>(const GridPoint&, const GridPoint&) = default;

    double norm() const {
        return std::sqrt(static_cast<double>(x) * static_cast<double>(x) +
                         static_cast<double>(y) * static_cast<double>(y) +
                         static_cast<double>(z) * static_cast<double>(z));
    }
    GridPoint operator-(const GridPoint& o) const { return {x - o.x, y - o.y, z - o.z}; }
    bool is_origin() const { return x == 0 && y == 0 && z == 0; }
};

inline std::string to_string(const GridPoint& p) {
    return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::to_string(p.z) + ")";
}

struct GridPointHash {
    std::size_t operator()(const GridPoint& p) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {p.x, p.y, p.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace spg
