#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "rwsl/common.hpp"

namespace rwsl::test {

// Best accuracy over every injective relabeling of pred, by enumeration.
inline double brute_accuracy(const LabelVector& pred, const LabelVector& truth) {
    const int k = std::max(*std::max_element(pred.begin(), pred.end()), *std::max_element(truth.begin(), truth.end())) + 1;
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hit += perm[static_cast<std::size_t>(pred[i])] == truth[i];
        best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(pred.size());
}

// Labels 0..k-1 read as base-k digits of `code`.
inline LabelVector decode_labels(std::size_t code, std::size_t n, int k) {
    LabelVector out(n);
    for (std::size_t i = 0; i < n; ++i, code /= static_cast<std::size_t>(k)) out[i] = static_cast<int>(code % k);
    return out;
}

}  // namespace rwsl::test
