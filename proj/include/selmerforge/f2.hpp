#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sf {

class F2Vec {
public:
    F2Vec() = default;
    explicit F2Vec(size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    size_t size() const { return n_; }
    bool get(size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
    void set(size_t i, bool v = true)
    {
        if (v) w_[i >> 6] |= uint64_t(1) << (i & 63);
        else w_[i >> 6] &= ~(uint64_t(1) << (i & 63));
    }
    void flip(size_t i) { w_[i >> 6] ^= uint64_t(1) << (i & 63); }
    F2Vec& operator^=(const F2Vec& o);
    F2Vec operator^(const F2Vec& o) const
    {
        F2Vec r = *this;
        r ^= o;
        return r;
    }
    bool is_zero() const;
    // Index of the first set bit, or size() when zero.
    size_t leading() const;
    size_t weight() const;
    bool dot(const F2Vec& o) const;
    // Concatenation [this | o].
    F2Vec concat(const F2Vec& o) const;
    F2Vec slice(size_t from, size_t len) const;
    bool operator==(const F2Vec& o) const { return n_ == o.n_ && w_ == o.w_; }
    bool operator!=(const F2Vec& o) const { return !(*this == o); }
    bool operator<(const F2Vec& o) const;
    std::string str() const;

private:
    size_t n_ = 0;
    std::vector<uint64_t> w_;
};

// Reduced row echelon form of the span; rows sorted by leading index.
std::vector<F2Vec> rref(std::vector<F2Vec> rows);
size_t rank(const std::vector<F2Vec>& rows);
// Reduces v against an rref basis; zero result means v lies in the span.
F2Vec reduce(const std::vector<F2Vec>& rref_basis, F2Vec v);
bool in_span(const std::vector<F2Vec>& rref_basis, const F2Vec& v);

// Map F2^k -> F2^n sending e_i to images[i]. Kernel basis (in rref) inside F2^k.
std::vector<F2Vec> kernel(const std::vector<F2Vec>& images, size_t domain_dim);
// Some x with sum x_i images[i] = target.
std::optional<F2Vec> preimage(const std::vector<F2Vec>& images, const F2Vec& target, size_t domain_dim);
// Intersection of two subspaces of the same ambient space, rref.
std::vector<F2Vec> intersect(const std::vector<F2Vec>& a, const std::vector<F2Vec>& b);
// Linear functionals vanishing exactly on span(rows), inside an ambient space of dimension n.
std::vector<F2Vec> annihilator(const std::vector<F2Vec>& rows, size_t n);

}  // namespace sf
