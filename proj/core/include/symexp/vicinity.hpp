#pragma once

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "symexp/model.hpp"
#include "symexp/oracle.hpp"

namespace symexp {

class VicinityError : public Error {
public:
    using Error::Error;
};

struct LabeledRow {
    Instance x;
    Label y = Label::Negative;

    friend bool operator==(const LabeledRow&, const LabeledRow&) = default;
};

/// Labeled neighbourhood V(x, r). rows[0] is always the explained instance.
struct LabeledDataset {
    std::size_t n_features = 0;
    std::vector<LabeledRow> rows;
    /// Set when fewer distinct neighbours than requested were reachable.
    bool truncated = false;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
};

/// Draws `count` distinct perturbations of x within Hamming distance `radius`
/// and labels them (plus x itself) with the oracle. The flip count is uniform
/// over {1..radius}, then the flipped positions are a uniform subset.
LabeledDataset sample_vicinity(const Instance& x, Oracle& oracle, std::size_t radius, std::size_t count,
                               std::uint64_t seed);

/// Keeps the dataset rows within `radius` of x (x is prepended) and labels them.
/// Throws VicinityError when nothing besides x survives.
LabeledDataset filter_dataset_vicinity(const Instance& x, std::span<const Instance> dataset, Oracle& oracle,
                                       std::size_t radius);

/// Radius 250 at 784 features, scaled proportionally to n (at least 1, at most n).
std::size_t default_radius(std::size_t n_features);
inline constexpr std::size_t kDefaultSampleCount = 200;

/// One instance per line as a '0'/'1' string; blank lines and '#' comments are skipped.
std::vector<Instance> read_instances(std::istream& in);
std::vector<Instance> read_instances_file(const std::string& path);

}  // namespace symexp
