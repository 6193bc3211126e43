#include "symexp/enumerate.hpp"

namespace symexp {

namespace {

FeatureSet mask_to_set(std::uint32_t mask) {
    FeatureSet s;
    for (std::size_t i = 0; mask != 0; ++i, mask >>= 1)
        if (mask & 1u) s.push_back(i);
    return s;
}

}  // namespace

BruteForceExplanations brute_force_explanations(const RandomForest& forest, const Instance& x, Label target) {
    const auto n = x.size();
    if (n > kBruteForceMaxFeatures)
        throw Error("brute-force explanations are limited to " + std::to_string(kBruteForceMaxFeatures) +
                    " features, got " + std::to_string(n));
    BruteForceExplanations out;
    if (forest.predict(x) == target) return out;

    const std::uint32_t full = (std::uint32_t{1} << n) - 1;
    const std::size_t size = std::size_t{1} << n;

    // inverts[S]: flipping exactly S reaches target.
    std::vector<std::uint8_t> inverts(size);
    for (std::uint32_t s = 0; s <= full; ++s) {
        Instance z = x;
        for (std::size_t i = 0; i < n; ++i)
            if ((s >> i) & 1u) z.flip(i);
        inverts[s] = forest.predict(z) == target;
    }

    // within[S]: some subset of S (S included) inverts.
    std::vector<std::uint8_t> within(inverts);
    for (std::size_t i = 0; i < n; ++i)
        for (std::uint32_t s = 0; s <= full; ++s)
            if ((s >> i) & 1u) within[s] |= within[s ^ (1u << i)];

    // Counterfactual: S inverts and no proper subset does.
    for (std::uint32_t s = 0; s <= full; ++s) {
        if (!inverts[s]) continue;
        bool minimal = true;
        for (std::size_t i = 0; i < n && minimal; ++i)
            if ((s >> i) & 1u) minimal = !within[s ^ (1u << i)];
        if (minimal) out.counterfactuals.push_back(mask_to_set(s));
    }

    // Sufficient: fixing S, no flip of the remaining features reaches target.
    auto sufficient = [&](std::uint32_t s) { return !within[full & ~s]; };
    for (std::uint32_t s = 0; s <= full; ++s) {
        if (!sufficient(s)) continue;
        bool minimal = true;
        for (std::size_t i = 0; i < n && minimal; ++i)
            if ((s >> i) & 1u) minimal = !sufficient(s ^ (1u << i));
        if (minimal) out.sufficient_reasons.push_back(mask_to_set(s));
    }

    sort_feature_sets(out.counterfactuals);
    sort_feature_sets(out.sufficient_reasons);
    return out;
}

}  // namespace symexp
