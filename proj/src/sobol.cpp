#include "sobol.hpp"

namespace sml {

namespace {

constexpr int kBits = 32;

struct DirSpec {
    int s;
    std::uint32_t a;
    std::uint32_t m[8];
};

// First dimensions of the Joe-Kuo "new-joe-kuo-6" table. Dimension 1 is the
// van der Corput sequence and is handled separately.
constexpr DirSpec kSpecs[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
};

}  // namespace

Sobol::Sobol(int dim) : dim_(dim) {
    constexpr int kMaxDim = 1 + sizeof(kSpecs) / sizeof(kSpecs[0]);
    if (dim < 1 || dim > kMaxDim)
        fail(ErrorKind::InvalidArgument,
             "Sobol dimension must be in [1," + std::to_string(kMaxDim) + "]");
    dirs_.assign(static_cast<size_t>(dim) * kBits, 0);
    // dim 0: v_k = 2^(31-k)
    for (int k = 0; k < kBits; ++k) dirs_[k] = 1u << (31 - k);
    for (int d = 1; d < dim; ++d) {
        const DirSpec& sp = kSpecs[d - 1];
        std::uint32_t* v = &dirs_[static_cast<size_t>(d) * kBits];
        const int s = sp.s;
        for (int k = 0; k < s && k < kBits; ++k) v[k] = sp.m[k] << (31 - k);
        for (int k = s; k < kBits; ++k) {
            v[k] = v[k - s] ^ (v[k - s] >> s);
            for (int j = 1; j < s; ++j)
                if ((sp.a >> (s - 1 - j)) & 1u) v[k] ^= v[k - j];
        }
    }
}

void Sobol::point(std::uint64_t index, double* out) const {
    const std::uint64_t gray = index ^ (index >> 1);
    for (int d = 0; d < dim_; ++d) {
        std::uint32_t x = 0;
        const std::uint32_t* v = &dirs_[static_cast<size_t>(d) * kBits];
        for (int k = 0; k < kBits; ++k)
            if ((gray >> k) & 1u) x ^= v[k];
        out[d] = x * (1.0 / 4294967296.0);
    }
}

std::vector<double> Sobol::point(std::uint64_t index) const {
    std::vector<double> p(dim_);
    point(index, p.data());
    return p;
}

std::vector<double> Sobol::point_in_box(std::uint64_t index,
                                        const std::vector<double>& half) const {
    std::vector<double> p = point(index);
    for (int d = 0; d < dim_; ++d) p[d] = (2.0 * p[d] - 1.0) * half[d];
    return p;
}

}  // namespace sml
