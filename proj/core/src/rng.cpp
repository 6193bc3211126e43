#include "symexp/rng.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace symexp {

std::vector<std::size_t> Rng::subset(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    if (k * 4 >= n) {
        // Partial Fisher-Yates over the full index range.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + below(n - i)]);
        out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
        // Floyd's algorithm.
        std::unordered_set<std::size_t> chosen;
        for (std::size_t j = n - k; j < n; ++j) {
            auto t = below(j + 1);
            if (!chosen.insert(t).second) chosen.insert(j);
        }
        out.assign(chosen.begin(), chosen.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace symexp
