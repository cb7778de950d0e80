#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shiftrec/error.hpp"

namespace shiftrec {

using Index = std::int64_t;

// 1-based coordinate vector, one index per dimension.
using Coord = std::vector<Index>;

class Shape {
public:
    Shape() = default;
    explicit Shape(std::vector<Index> extents);

    Index dim() const { return static_cast<Index>(extents_.size()); }
    Index extent(Index d) const { return extents_[static_cast<std::size_t>(d)]; }
    const std::vector<Index>& extents() const { return extents_; }

    // Total number of cells; construction rejects shapes that overflow int64.
    Index cells() const { return cells_; }

    bool in_bounds(std::span<const Index> coord) const;

    // Row-major 0-based linear index of a 1-based coordinate.
    std::uint64_t linearize(std::span<const Index> coord) const;
    Coord delinearize(std::uint64_t linear) const;

    // Row-major odometer step over 1-based coordinates; starts from
    // (1,...,1) and returns false after the last cell.
    bool next_coord(Coord& coord) const;

    bool operator==(const Shape& other) const { return extents_ == other.extents_; }

private:
    std::vector<Index> extents_;
    std::vector<std::uint64_t> strides_;
    Index cells_ = 0;
};

// Immutable sparse tensor: the key set of `known` entries is sigma(A), its
// complement within the shape is the unknown set. Entries are stored sorted
// by row-major linear index, which fixes every iteration order in the
// library. Copies share storage and are safe for concurrent reads.
class SparseTensor {
public:
    SparseTensor() = default;

    // flat_coords holds d indices per entry (1-based). Throws ConfigError on
    // out-of-bounds or duplicate coordinates.
    SparseTensor(Shape shape, std::vector<Index> flat_coords, std::vector<double> values);
    SparseTensor(Shape shape, const std::vector<std::pair<Coord, double>>& entries);

    static SparseTensor empty(Shape shape) { return SparseTensor(std::move(shape), {}, std::vector<double>{}); }

    const Shape& shape() const { return storage_->shape; }
    Index dim() const { return storage_->shape.dim(); }
    Index known_count() const { return static_cast<Index>(values_->size()); }
    Index unknown_count() const { return shape().cells() - known_count(); }

    std::span<const Index> coord(Index entry) const {
        const auto d = static_cast<std::size_t>(dim());
        return {storage_->flat.data() + static_cast<std::size_t>(entry) * d, d};
    }
    double value(Index entry) const { return (*values_)[static_cast<std::size_t>(entry)]; }
    std::uint64_t linear(Index entry) const { return storage_->linear[static_cast<std::size_t>(entry)]; }
    std::span<const double> values() const { return *values_; }
    std::span<const std::uint64_t> linear_indices() const { return storage_->linear; }

    // Entry index of a coordinate, if known. Throws ConfigError out of bounds.
    std::optional<Index> find(std::span<const Index> coord) const;
    bool is_known(std::span<const Index> coord) const { return find(coord).has_value(); }
    std::optional<double> value_at(std::span<const Index> coord) const;

    // Same coordinate structure, new values (shares coordinate storage).
    SparseTensor with_values(std::vector<double> values) const;

private:
    struct Storage {
        Shape shape;
        std::vector<Index> flat;           // d indices per entry, sorted by linear
        std::vector<std::uint64_t> linear; // sorted, no duplicates
    };
    SparseTensor(std::shared_ptr<const Storage> s, std::shared_ptr<const std::vector<double>> v)
        : storage_(std::move(s)), values_(std::move(v)) {}

    std::shared_ptr<const Storage> storage_ = std::make_shared<Storage>();
    std::shared_ptr<const std::vector<double>> values_ = std::make_shared<std::vector<double>>();
};

// Identity of one k-dimensional subtensor: the free dimensions pi (sorted,
// 1-based) plus the fixed values of the complementary dimensions.
struct SubtensorId {
    std::vector<Index> pi;      // free dimensions, ascending
    std::vector<Index> anchor;  // values of the complement dims, in ascending dim order
    bool operator==(const SubtensorId&) const = default;
};

std::string to_string(const SubtensorId& id);

// Ordered enumeration of all k-dimensional subtensors of a shape: pi subsets
// in lexicographic order, anchors in row-major order within each subset.
// Ids are computed on demand; nothing dense is materialized.
class SubtensorCatalog {
public:
    struct Group {
        std::vector<Index> pi;              // free dims
        std::vector<Index> pic;             // anchored dims
        std::vector<Index> anchor_extents;  // extents of pic dims
        Index offset = 0;                   // catalog index of the group's first subtensor
        Index count = 0;
    };

    SubtensorCatalog(Shape shape, Index k);  // throws ConfigError unless 1 <= k < d

    const Shape& shape() const { return shape_; }
    Index k() const { return k_; }
    Index size() const { return total_; }
    const std::vector<Group>& groups() const { return groups_; }

    SubtensorId id_at(Index catalog_index) const;

    // Catalog index of the group-g subtensor that contains `coord`.
    Index index_containing(Index group, std::span<const Index> coord) const;

    // Catalog indices of all C(d,k) subtensors containing `coord`, ascending.
    void indices_containing(std::span<const Index> coord, std::vector<Index>& out) const;

    // All (catalog index, id) pairs containing alpha, in catalog order.
    std::vector<std::pair<Index, SubtensorId>> subtensors_containing(const Coord& alpha) const;

    // Index within the catalog of an explicit id; throws ConfigError if the
    // id does not belong to this catalog.
    Index index_of(const SubtensorId& id) const;

private:
    Shape shape_;
    Index k_ = 0;
    Index total_ = 0;
    std::vector<Group> groups_;
};

inline SubtensorCatalog catalog(Shape shape, Index k) { return SubtensorCatalog(std::move(shape), k); }

// Known coordinates of `t` lying in the given subtensor, in row-major order.
std::vector<Coord> known_coords_of(const SparseTensor& t, const SubtensorId& id);

}  // namespace shiftrec
