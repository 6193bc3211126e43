#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "symexp/model.hpp"

namespace symexp {

class RenderError : public Error {
public:
    using Error::Error;
};

// Feature i sits at row i / width, column i % width.

/// ASCII PGM (P2, maxval 255): features in `set` are white, the rest black.
std::string render_mask_pgm(std::span<const std::size_t> set, std::size_t width, std::size_t height);

/// counts[i] = number of sets containing feature i.
std::vector<std::size_t> feature_counts(std::span<const FeatureSet> sets, std::size_t n);

/// Pixel value round(255 * count / max count); all black when nothing is flagged.
std::string render_heatmap_pgm(std::span<const FeatureSet> sets, std::size_t width, std::size_t height);

/// Explanation sets of one kind ("counterfactuals" or "sufficient_reasons") read
/// from a report JSON. A suppressed list (null) reads as empty.
std::vector<FeatureSet> report_sets(const nlohmann::json& report, const std::string& kind);

}  // namespace symexp
