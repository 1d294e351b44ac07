#include "selmerforge/f2.hpp"

#include <algorithm>
#include <bit>

#include "selmerforge/errors.hpp"

namespace sf {

F2Vec& F2Vec::operator^=(const F2Vec& o)
{
    if (n_ != o.n_) throw InvalidArgument("F2Vec: size mismatch");
    for (size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    return *this;
}

bool F2Vec::is_zero() const
{
    for (uint64_t x : w_)
        if (x) return false;
    return true;
}

size_t F2Vec::leading() const
{
    for (size_t i = 0; i < w_.size(); ++i)
        if (w_[i]) return i * 64 + std::countr_zero(w_[i]);
    return n_;
}

size_t F2Vec::weight() const
{
    size_t c = 0;
    for (uint64_t x : w_) c += std::popcount(x);
    return c;
}

bool F2Vec::dot(const F2Vec& o) const
{
    if (n_ != o.n_) throw InvalidArgument("F2Vec: size mismatch");
    unsigned c = 0;
    for (size_t i = 0; i < w_.size(); ++i) c += std::popcount(w_[i] & o.w_[i]);
    return c & 1;
}

F2Vec F2Vec::concat(const F2Vec& o) const
{
    F2Vec r(n_ + o.n_);
    for (size_t i = 0; i < n_; ++i)
        if (get(i)) r.set(i);
    for (size_t i = 0; i < o.n_; ++i)
        if (o.get(i)) r.set(n_ + i);
    return r;
}

F2Vec F2Vec::slice(size_t from, size_t len) const
{
    F2Vec r(len);
    for (size_t i = 0; i < len; ++i)
        if (get(from + i)) r.set(i);
    return r;
}

bool F2Vec::operator<(const F2Vec& o) const
{
    if (n_ != o.n_) return n_ < o.n_;
    for (size_t i = 0; i < n_; ++i)
        if (get(i) != o.get(i)) return o.get(i);
    return false;
}

std::string F2Vec::str() const
{
    std::string s(n_, '0');
    for (size_t i = 0; i < n_; ++i)
        if (get(i)) s[i] = '1';
    return s;
}

std::vector<F2Vec> rref(std::vector<F2Vec> rows)
{
    std::vector<F2Vec> out;
    for (auto& r : rows) {
        for (auto& b : out)
            if (r.get(b.leading())) r ^= b;
        if (r.is_zero()) continue;
        size_t lead = r.leading();
        for (auto& b : out)
            if (b.get(lead)) b ^= r;
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const F2Vec& a, const F2Vec& b) { return a.leading() < b.leading(); });
    return out;
}

size_t rank(const std::vector<F2Vec>& rows) { return rref(rows).size(); }

F2Vec reduce(const std::vector<F2Vec>& basis, F2Vec v)
{
    for (auto& b : basis)
        if (v.get(b.leading())) v ^= b;
    return v;
}

bool in_span(const std::vector<F2Vec>& basis, const F2Vec& v) { return reduce(basis, v).is_zero(); }

std::vector<F2Vec> kernel(const std::vector<F2Vec>& images, size_t k)
{
    if (images.size() != k) throw InvalidArgument("kernel: image count differs from domain dimension");
    // Row-reduce [image | e_i]; rows whose image part vanishes give the kernel.
    size_t n = images.empty() ? 0 : images[0].size();
    std::vector<F2Vec> rows;
    rows.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        F2Vec e(k);
        e.set(i);
        rows.push_back(images[i].concat(e));
    }
    std::vector<F2Vec> pivots, ker;
    for (auto& r : rows) {
        for (auto& b : pivots)
            if (r.get(b.leading())) r ^= b;
        size_t lead = r.leading();
        if (lead < n) {
            pivots.push_back(r);
        } else {
            ker.push_back(r.slice(n, k));
        }
    }
    return rref(ker);
}

std::optional<F2Vec> preimage(const std::vector<F2Vec>& images, const F2Vec& target, size_t k)
{
    if (images.size() != k) throw InvalidArgument("preimage: image count differs from domain dimension");
    size_t n = target.size();
    std::vector<F2Vec> pivots;
    for (size_t i = 0; i < k; ++i) {
        F2Vec e(k);
        e.set(i);
        F2Vec r = images[i].concat(e);
        for (auto& b : pivots)
            if (r.get(b.leading())) r ^= b;
        if (r.leading() < n) pivots.push_back(r);
    }
    F2Vec t = target.concat(F2Vec(k));
    for (auto& b : pivots)
        if (t.get(b.leading())) t ^= b;
    if (!t.slice(0, n).is_zero()) return std::nullopt;
    return t.slice(n, k);
}

std::vector<F2Vec> intersect(const std::vector<F2Vec>& a, const std::vector<F2Vec>& b)
{
    if (a.empty() || b.empty()) return {};
    std::vector<F2Vec> imgs(a);
    imgs.insert(imgs.end(), b.begin(), b.end());
    auto ker = kernel(imgs, imgs.size());
    std::vector<F2Vec> out;
    for (auto& x : ker) {
        F2Vec v(a[0].size());
        for (size_t i = 0; i < a.size(); ++i)
            if (x.get(i)) v ^= a[i];
        out.push_back(v);
    }
    return rref(out);
}

std::vector<F2Vec> annihilator(const std::vector<F2Vec>& rows, size_t n)
{
    // Functionals f with f.r = 0 for every row: kernel of the map e_i -> (r_j[i])_j.
    std::vector<F2Vec> imgs(n, F2Vec(rows.size()));
    for (size_t j = 0; j < rows.size(); ++j)
        for (size_t i = 0; i < n; ++i)
            if (rows[j].get(i)) imgs[i].set(j);
    if (rows.empty()) {
        std::vector<F2Vec> all;
        for (size_t i = 0; i < n; ++i) {
            F2Vec e(n);
            e.set(i);
            all.push_back(e);
        }
        return all;
    }
    return kernel(imgs, n);
}

}  // namespace sf
