#include "symexp/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace symexp {

namespace {

void check_set(std::span<const std::size_t> set, std::size_t n) {
    for (auto f : set)
        if (f >= n)
            throw RenderError("feature " + std::to_string(f) + " does not fit a " + std::to_string(n) + "-pixel image");
}

std::string pgm(const std::vector<int>& px, std::size_t width, std::size_t height) {
    std::ostringstream out;
    out << "P2\n" << width << ' ' << height << "\n255\n";
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c) out << ' ';
            out << px[r * width + c];
        }
        out << '\n';
    }
    return out.str();
}

void check_dims(std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw RenderError("image dimensions must be positive");
}

}  // namespace

std::string render_mask_pgm(std::span<const std::size_t> set, std::size_t width, std::size_t height) {
    check_dims(width, height);
    const auto n = width * height;
    check_set(set, n);
    std::vector<int> px(n, 0);
    for (auto f : set) px[f] = 255;
    return pgm(px, width, height);
}

std::vector<std::size_t> feature_counts(std::span<const FeatureSet> sets, std::size_t n) {
    std::vector<std::size_t> counts(n, 0);
    for (const auto& s : sets) {
        check_set(s, n);
        for (auto f : s) ++counts[f];
    }
    return counts;
}

std::string render_heatmap_pgm(std::span<const FeatureSet> sets, std::size_t width, std::size_t height) {
    check_dims(width, height);
    const auto counts = feature_counts(sets, width * height);
    const auto top = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    std::vector<int> px(counts.size(), 0);
    if (top > 0)
        for (std::size_t i = 0; i < counts.size(); ++i)
            px[i] = static_cast<int>(std::lround(255.0 * static_cast<double>(counts[i]) / static_cast<double>(top)));
    return pgm(px, width, height);
}

std::vector<FeatureSet> report_sets(const nlohmann::json& report, const std::string& kind) {
    if (kind != "counterfactuals" && kind != "sufficient_reasons")
        throw RenderError("unknown explanation kind '" + kind + "'");
    if (!report.is_object() || !report.contains(kind)) throw RenderError("report has no '" + kind + "' field");
    const auto& v = report.at(kind);
    if (v.is_null()) return {};
    try {
        return v.get<std::vector<FeatureSet>>();
    } catch (const nlohmann::json::exception& e) {
        throw RenderError("malformed '" + kind + "' list: " + e.what());
    }
}

}  // namespace symexp
