#include "shiftrec/tensor.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace shiftrec {

namespace {

std::string coord_to_string(std::span<const Index> c) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
    os << ")";
    return os.str();
}

}  // namespace

Shape::Shape(std::vector<Index> extents) : extents_(std::move(extents)) {
    if (extents_.empty()) throw ConfigError("shape must have at least one dimension");
    for (Index n : extents_) {
        if (n < 1) throw ConfigError("shape extents must be positive");
    }
    cells_ = 1;
    for (Index n : extents_) {
        if (cells_ > std::numeric_limits<Index>::max() / n) {
            throw ConfigError("shape cell count overflows int64");
        }
        cells_ *= n;
    }
    strides_.assign(extents_.size(), 1);
    for (std::size_t j = extents_.size(); j-- > 1;) {
        strides_[j - 1] = strides_[j] * static_cast<std::uint64_t>(extents_[j]);
    }
}

bool Shape::in_bounds(std::span<const Index> coord) const {
    if (coord.size() != extents_.size()) return false;
    for (std::size_t j = 0; j < coord.size(); ++j) {
        if (coord[j] < 1 || coord[j] > extents_[j]) return false;
    }
    return true;
}

std::uint64_t Shape::linearize(std::span<const Index> coord) const {
    std::uint64_t idx = 0;
    for (std::size_t j = 0; j < coord.size(); ++j) {
        idx += static_cast<std::uint64_t>(coord[j] - 1) * strides_[j];
    }
    return idx;
}

Coord Shape::delinearize(std::uint64_t linear) const {
    Coord c(extents_.size());
    for (std::size_t j = 0; j < extents_.size(); ++j) {
        c[j] = static_cast<Index>(linear / strides_[j]) + 1;
        linear %= strides_[j];
    }
    return c;
}

bool Shape::next_coord(Coord& coord) const {
    for (std::size_t j = extents_.size(); j-- > 0;) {
        if (coord[j] < extents_[j]) {
            ++coord[j];
            return true;
        }
        coord[j] = 1;
    }
    return false;
}

SparseTensor::SparseTensor(Shape shape, std::vector<Index> flat_coords, std::vector<double> values) {
    const auto d = static_cast<std::size_t>(shape.dim());
    if (flat_coords.size() != values.size() * d) {
        throw ConfigError("entry coordinate array does not match value count");
    }
    const std::size_t n = values.size();

    auto storage = std::make_shared<Storage>();
    storage->shape = shape;
    storage->linear.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
        std::span<const Index> c{flat_coords.data() + e * d, d};
        if (!shape.in_bounds(c)) {
            throw ConfigError("coordinate " + coord_to_string(c) + " out of bounds for shape");
        }
        storage->linear[e] = shape.linearize(c);
    }

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return storage->linear[a] < storage->linear[b]; });

    Storage sorted;
    sorted.shape = std::move(shape);
    sorted.flat.resize(n * d);
    sorted.linear.resize(n);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t e = perm[i];
        sorted.linear[i] = storage->linear[e];
        vals[i] = values[e];
        std::copy_n(flat_coords.data() + e * d, d, sorted.flat.data() + i * d);
        if (i > 0 && sorted.linear[i] == sorted.linear[i - 1]) {
            throw ConfigError("duplicate coordinate " +
                              coord_to_string({sorted.flat.data() + i * d, d}));
        }
    }
    storage_ = std::make_shared<const Storage>(std::move(sorted));
    values_ = std::make_shared<const std::vector<double>>(std::move(vals));
}

SparseTensor::SparseTensor(Shape shape, const std::vector<std::pair<Coord, double>>& entries) {
    const auto d = static_cast<std::size_t>(shape.dim());
    std::vector<Index> flat;
    std::vector<double> vals;
    flat.reserve(entries.size() * d);
    vals.reserve(entries.size());
    for (const auto& [c, v] : entries) {
        if (c.size() != d) throw ConfigError("coordinate dimensionality mismatch");
        flat.insert(flat.end(), c.begin(), c.end());
        vals.push_back(v);
    }
    *this = SparseTensor(std::move(shape), std::move(flat), std::move(vals));
}

std::optional<Index> SparseTensor::find(std::span<const Index> coord) const {
    if (!shape().in_bounds(coord)) {
        throw ConfigError("coordinate " + coord_to_string(coord) + " out of bounds");
    }
    const std::uint64_t lin = shape().linearize(coord);
    const auto& arr = storage_->linear;
    auto it = std::lower_bound(arr.begin(), arr.end(), lin);
    if (it == arr.end() || *it != lin) return std::nullopt;
    return static_cast<Index>(it - arr.begin());
}

std::optional<double> SparseTensor::value_at(std::span<const Index> coord) const {
    auto e = find(coord);
    if (!e) return std::nullopt;
    return value(*e);
}

SparseTensor SparseTensor::with_values(std::vector<double> values) const {
    if (values.size() != values_->size()) throw ConfigError("value count mismatch in with_values");
    return SparseTensor(storage_, std::make_shared<const std::vector<double>>(std::move(values)));
}

std::string to_string(const SubtensorId& id) {
    std::ostringstream os;
    os << "pi={";
    for (std::size_t i = 0; i < id.pi.size(); ++i) os << (i ? "," : "") << id.pi[i];
    os << "} anchor=(";
    for (std::size_t i = 0; i < id.anchor.size(); ++i) os << (i ? "," : "") << id.anchor[i];
    os << ")";
    return os.str();
}

SubtensorCatalog::SubtensorCatalog(Shape shape, Index k) : shape_(std::move(shape)), k_(k) {
    const Index d = shape_.dim();
    if (k < 1 || k >= d) {
        throw ConfigError("subtensor order k=" + std::to_string(k) +
                          " invalid for dimensionality d=" + std::to_string(d) +
                          " (need 1 <= k < d)");
    }
    // pi subsets of [d] with |pi| = k, lexicographic.
    std::vector<Index> pi(static_cast<std::size_t>(k));
    std::iota(pi.begin(), pi.end(), Index{1});
    Index offset = 0;
    while (true) {
        Group g;
        g.pi = pi;
        for (Index dim = 1; dim <= d; ++dim) {
            if (!std::binary_search(pi.begin(), pi.end(), dim)) g.pic.push_back(dim);
        }
        g.count = 1;
        for (Index dim : g.pic) {
            g.anchor_extents.push_back(shape_.extent(dim - 1));
            g.count *= shape_.extent(dim - 1);
        }
        g.offset = offset;
        offset += g.count;
        groups_.push_back(std::move(g));

        // advance the combination
        std::size_t j = pi.size();
        while (j > 0 && pi[j - 1] == d - static_cast<Index>(pi.size() - j)) --j;
        if (j == 0) break;
        ++pi[j - 1];
        for (std::size_t l = j; l < pi.size(); ++l) pi[l] = pi[l - 1] + 1;
    }
    total_ = offset;
}

SubtensorId SubtensorCatalog::id_at(Index catalog_index) const {
    if (catalog_index < 0 || catalog_index >= total_) {
        throw ConfigError("catalog index out of range");
    }
    for (const Group& g : groups_) {
        if (catalog_index < g.offset + g.count) {
            Index rem = catalog_index - g.offset;
            SubtensorId id;
            id.pi = g.pi;
            id.anchor.resize(g.pic.size());
            for (std::size_t j = g.pic.size(); j-- > 0;) {
                id.anchor[j] = rem % g.anchor_extents[j] + 1;
                rem /= g.anchor_extents[j];
            }
            return id;
        }
    }
    throw ConfigError("catalog index out of range");
}

Index SubtensorCatalog::index_containing(Index group, std::span<const Index> coord) const {
    const Group& g = groups_[static_cast<std::size_t>(group)];
    Index lin = 0;
    for (std::size_t j = 0; j < g.pic.size(); ++j) {
        lin = lin * g.anchor_extents[j] + (coord[static_cast<std::size_t>(g.pic[j] - 1)] - 1);
    }
    return g.offset + lin;
}

void SubtensorCatalog::indices_containing(std::span<const Index> coord, std::vector<Index>& out) const {
    out.clear();
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        out.push_back(index_containing(static_cast<Index>(g), coord));
    }
}

std::vector<std::pair<Index, SubtensorId>> SubtensorCatalog::subtensors_containing(const Coord& alpha) const {
    if (!shape_.in_bounds(alpha)) {
        throw ConfigError("coordinate out of bounds for catalog shape");
    }
    std::vector<std::pair<Index, SubtensorId>> out;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        const Index idx = index_containing(static_cast<Index>(g), alpha);
        out.emplace_back(idx, id_at(idx));
    }
    return out;
}

Index SubtensorCatalog::index_of(const SubtensorId& id) const {
    for (const Group& g : groups_) {
        if (g.pi != id.pi) continue;
        if (id.anchor.size() != g.pic.size()) break;
        Index lin = 0;
        for (std::size_t j = 0; j < g.pic.size(); ++j) {
            if (id.anchor[j] < 1 || id.anchor[j] > g.anchor_extents[j]) {
                throw ConfigError("subtensor anchor out of bounds: " + to_string(id));
            }
            lin = lin * g.anchor_extents[j] + (id.anchor[j] - 1);
        }
        return g.offset + lin;
    }
    throw ConfigError("subtensor " + to_string(id) + " does not belong to this catalog");
}

std::vector<Coord> known_coords_of(const SparseTensor& t, const SubtensorId& id) {
    SubtensorCatalog cat(t.shape(), static_cast<Index>(id.pi.size()));
    cat.index_of(id);  // validates membership
    std::vector<std::size_t> pic_pos;
    for (Index dim = 1; dim <= t.dim(); ++dim) {
        if (!std::binary_search(id.pi.begin(), id.pi.end(), dim)) {
            pic_pos.push_back(static_cast<std::size_t>(dim - 1));
        }
    }
    std::vector<Coord> out;
    for (Index e = 0; e < t.known_count(); ++e) {
        auto c = t.coord(e);
        bool match = true;
        for (std::size_t j = 0; j < pic_pos.size(); ++j) {
            if (c[pic_pos[j]] != id.anchor[j]) {
                match = false;
                break;
            }
        }
        if (match) out.emplace_back(c.begin(), c.end());
    }
    return out;
}

}  // namespace shiftrec
