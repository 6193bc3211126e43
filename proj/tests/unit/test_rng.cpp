#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "symexp/rng.hpp"

using namespace symexp;

TEST_CASE("rng is reproducible per seed") {
    Rng a(5), b(5), c(6);
    std::vector<std::uint64_t> va, vb, vc;
    for (int i = 0; i < 10; ++i) {
        va.push_back(a.next());
        vb.push_back(b.next());
        vc.push_back(c.next());
    }
    CHECK(va == vb);
    CHECK(va != vc);
}

TEST_CASE("below stays in range and covers it") {
    Rng r(1);
    std::vector<int> hits(7);
    for (int i = 0; i < 7000; ++i) {
        auto v = r.below(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    for (int h : hits) CHECK(h > 800);
}

TEST_CASE("subset returns k distinct sorted indices") {
    Rng r(3);
    for (std::size_t n = 1; n < 30; ++n) {
        for (std::size_t k = 0; k <= n; ++k) {
            auto s = r.subset(n, k);
            CHECK(s.size() == k);
            CHECK(std::is_sorted(s.begin(), s.end()));
            CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == k);
            if (k) CHECK(s.back() < n);
        }
    }
}

TEST_CASE("subset is uniform over 2-subsets of 4") {
    Rng r(9);
    std::map<std::vector<std::size_t>, int> counts;
    for (int i = 0; i < 6000; ++i) ++counts[r.subset(4, 2)];
    CHECK(counts.size() == 6);
    for (auto& [s, c] : counts) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("split seeds are distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(split_seed(42, s));
    CHECK(seen.size() == 1000);
    static_assert(split_seed(1, 2) == split_seed(1, 2));
}
