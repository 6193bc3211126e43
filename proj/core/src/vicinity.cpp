#include "symexp/vicinity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "symexp/rng.hpp"

namespace symexp {

namespace {

// Number of instances at distance 1..radius, saturating at `cap`.
std::size_t ball_size(std::size_t n, std::size_t radius, std::size_t cap) {
    long double total = 0, binom = 1;
    for (std::size_t k = 1; k <= radius; ++k) {
        binom = binom * static_cast<long double>(n - k + 1) / static_cast<long double>(k);
        total += binom;
        if (total > static_cast<long double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(total));
}

// Visits every k-subset of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        f(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

LabeledDataset label_rows(std::vector<Instance> xs, Oracle& oracle, std::size_t n) {
    auto ys = oracle.predict_batch(xs);
    LabeledDataset ds;
    ds.n_features = n;
    ds.rows.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ds.rows.push_back({std::move(xs[i]), ys[i]});
    return ds;
}

}  // namespace

LabeledDataset sample_vicinity(const Instance& x, Oracle& oracle, std::size_t radius, std::size_t count,
                               std::uint64_t seed) {
    const auto n = x.size();
    if (n == 0) throw VicinityError("cannot sample around an empty instance");
    if (radius < 1 || radius > n)
        throw VicinityError("radius must lie in [1, " + std::to_string(n) + "], got " + std::to_string(radius));
    if (count < 1) throw VicinityError("sample count must be at least 1");

    std::vector<Instance> xs{x};
    bool truncated = false;
    const auto reachable = ball_size(n, radius, count);

    if (reachable <= count) {
        for (std::size_t k = 1; k <= radius; ++k)
            for_each_subset(n, k, [&](const std::vector<std::size_t>& s) { xs.push_back(x.flipped(s)); });
        truncated = reachable < count;
    } else {
        Rng rng(seed);
        std::set<Instance> seen{x};
        const std::size_t stall_limit = 1000 + 10 * count;
        std::size_t stalled = 0;
        while (xs.size() < count + 1) {
            const auto k = static_cast<std::size_t>(rng.between(1, radius));
            auto z = x.flipped(rng.subset(n, k));
            if (seen.insert(z).second) {
                xs.push_back(std::move(z));
                stalled = 0;
            } else if (++stalled > stall_limit) {
                truncated = true;
                break;
            }
        }
    }

    auto ds = label_rows(std::move(xs), oracle, n);
    ds.truncated = truncated;
    return ds;
}

LabeledDataset filter_dataset_vicinity(const Instance& x, std::span<const Instance> dataset, Oracle& oracle,
                                       std::size_t radius) {
    const auto n = x.size();
    std::vector<Instance> xs{x};
    for (const auto& z : dataset) {
        if (z.size() != n)
            throw VicinityError("dataset instance has " + std::to_string(z.size()) + " features, expected " +
                                std::to_string(n));
        if (hamming(z, x) <= radius) xs.push_back(z);
    }
    if (xs.size() < 2)
        throw VicinityError("no dataset instance within radius " + std::to_string(radius) +
                            " of x; use a larger radius or sampling mode");
    return label_rows(std::move(xs), oracle, n);
}

std::size_t default_radius(std::size_t n) {
    auto r = static_cast<std::size_t>(std::llround(250.0 * static_cast<double>(n) / 784.0));
    return std::clamp<std::size_t>(r, 1, std::max<std::size_t>(n, 1));
}

std::vector<Instance> read_instances(std::istream& in) {
    std::vector<Instance> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        Instance z;
        try {
            z = Instance::from_string(std::string_view(line).substr(first));
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
        if (out.empty())
            n = z.size();
        else if (z.size() != n)
            throw ParseError(line_no, "instance length " + std::to_string(z.size()) + " differs from " +
                                          std::to_string(n));
        out.push_back(std::move(z));
    }
    return out;
}

std::vector<Instance> read_instances_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open instance file '" + path + "'");
    return read_instances(in);
}

}  // namespace symexp
