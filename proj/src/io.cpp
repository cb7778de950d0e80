#include "shiftrec/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "shiftrec/rng.hpp"

namespace shiftrec {

namespace {

// gzread-backed line reader; zlib reads plain files transparently.
class LineReader {
public:
    explicit LineReader(const std::string& path) : path_(path) {
        file_ = gzopen(path.c_str(), "rb");
        if (!file_) throw ConfigError("cannot open " + path);
    }
    ~LineReader() {
        if (file_) gzclose(file_);
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    bool next(std::string& line) {
        line.clear();
        if (eof_ && buf_pos_ >= buf_len_) return false;
        while (true) {
            if (buf_pos_ >= buf_len_) {
                if (eof_) return !line.empty();
                const int n = gzread(file_, buf_, sizeof(buf_));
                if (n < 0) throw ConfigError("read error in " + path_);
                buf_len_ = static_cast<std::size_t>(n);
                buf_pos_ = 0;
                if (buf_len_ == 0) {
                    eof_ = true;
                    return !line.empty();
                }
            }
            const char* start = buf_ + buf_pos_;
            const char* nl =
                static_cast<const char*>(std::memchr(start, '\n', buf_len_ - buf_pos_));
            if (nl) {
                line.append(start, nl);
                buf_pos_ = static_cast<std::size_t>(nl - buf_) + 1;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
            line.append(start, static_cast<const char*>(buf_) + buf_len_);
            buf_pos_ = buf_len_;
        }
    }

private:
    std::string path_;
    gzFile file_ = nullptr;
    char buf_[1 << 16];
    std::size_t buf_pos_ = 0;
    std::size_t buf_len_ = 0;
    bool eof_ = false;
};

bool parse_i64(const std::string& s, Index& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parse_f64(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> split_on(const std::string& line, const std::string& sep) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (true) {
        const std::size_t j = line.find(sep, i);
        if (j == std::string::npos) {
            out.push_back(line.substr(i));
            break;
        }
        out.push_back(line.substr(i, j - i));
        i = j + sep.size();
    }
    return out;
}

bool on_scale(double v, const RatingScale& s) {
    if (v < s.min_value - 1e-9 || v > s.max_value + 1e-9) return false;
    const double steps = (v - s.min_value) / s.step;
    return std::abs(steps - std::llround(steps)) < 1e-6;
}

void format_value(char* buf, std::size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

SparseTensor read_coo(const std::string& path) {
    LineReader reader(path);
    std::string line;
    Index lineno = 0;
    std::optional<Shape> shape;
    std::vector<Index> flat;
    std::vector<double> values;
    while (reader.next(line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto tokens = split_ws(line.substr(1));
            if (!tokens.empty() && tokens[0] == "shape") {
                if (shape) throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate shape header");
                std::vector<Index> extents;
                for (std::size_t i = 1; i < tokens.size(); ++i) {
                    Index n;
                    if (!parse_i64(tokens[i], n)) {
                        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad extent '" + tokens[i] + "'");
                    }
                    extents.push_back(n);
                }
                shape = Shape(std::move(extents));
            }
            continue;
        }
        if (!shape) throw ConfigError(path + ":" + std::to_string(lineno) + ": entry before `# shape` header");
        auto tokens = split_ws(line);
        const auto d = static_cast<std::size_t>(shape->dim());
        if (tokens.size() != d + 1) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(d) +
                              " indices and a value, got " + std::to_string(tokens.size()) + " fields");
        }
        for (std::size_t j = 0; j < d; ++j) {
            Index idx;
            if (!parse_i64(tokens[j], idx)) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": bad index '" + tokens[j] + "'");
            }
            flat.push_back(idx);
        }
        double v;
        if (!parse_f64(tokens[d], v) || !std::isfinite(v)) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value '" + tokens[d] + "'");
        }
        values.push_back(v);
    }
    if (!shape) throw ConfigError(path + ": missing `# shape` header");
    try {
        return SparseTensor(*shape, std::move(flat), std::move(values));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string coo_to_string(const SparseTensor& t) {
    std::ostringstream os;
    os << "# shape";
    for (Index n : t.shape().extents()) os << " " << n;
    os << "\n";
    char buf[64];
    for (Index e = 0; e < t.known_count(); ++e) {
        for (Index idx : t.coord(e)) os << idx << " ";
        format_value(buf, sizeof(buf), t.value(e));
        os << buf << "\n";
    }
    return os.str();
}

void write_coo(const SparseTensor& t, const std::string& path) {
    const std::string body = coo_to_string(t);
    if (path == "-") {
        std::fwrite(body.data(), 1, body.size(), stdout);
        return;
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    const std::size_t n = std::fwrite(body.data(), 1, body.size(), f);
    std::fclose(f);
    if (n != body.size()) throw ConfigError("short write to " + path);
}

void write_completed_coo(const CompletionResult& c, const std::string& path) {
    std::FILE* f = path == "-" ? stdout : std::fopen(path.c_str(), "wb");
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    const Shape& shape = c.source().shape();
    std::fputs("# shape", f);
    for (Index n : shape.extents()) std::fprintf(f, " %lld", static_cast<long long>(n));
    std::fputc('\n', f);
    char buf[64];
    Coord coord(static_cast<std::size_t>(shape.dim()), 1);
    do {
        for (Index idx : coord) std::fprintf(f, "%lld ", static_cast<long long>(idx));
        format_value(buf, sizeof(buf), c.value(coord));
        std::fputs(buf, f);
        std::fputc('\n', f);
    } while (shape.next_coord(coord));
    if (f != stdout) std::fclose(f);
}

MovieLensFlavor movielens_flavor_from_string(const std::string& name) {
    if (name == "ml100k") return MovieLensFlavor::ml100k;
    if (name == "ml1m") return MovieLensFlavor::ml1m;
    if (name == "ml10m") return MovieLensFlavor::ml10m;
    throw ConfigError("unknown MovieLens flavor '" + name + "' (ml100k, ml1m, ml10m)");
}

RatingScale movielens_scale(MovieLensFlavor flavor) {
    switch (flavor) {
        case MovieLensFlavor::ml100k:
        case MovieLensFlavor::ml1m:
            return {1.0, 5.0, 1.0};
        case MovieLensFlavor::ml10m:
            return {0.5, 5.0, 0.5};
    }
    throw ConfigError("unknown flavor");
}

RatingsDataset parse_movielens(const std::string& path, MovieLensFlavor flavor) {
    const RatingScale scale = movielens_scale(flavor);
    const bool tabbed = flavor == MovieLensFlavor::ml100k;

    LineReader reader(path);
    std::string line;
    Index lineno = 0;
    std::vector<Index> users, items;
    std::vector<double> ratings;
    while (reader.next(line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        auto tokens = tabbed ? split_ws(line) : split_on(line, "::");
        if (tokens.size() != 4) {
            throw ConfigError(where + ": expected 4 fields (user, item, rating, timestamp), got " +
                              std::to_string(tokens.size()));
        }
        Index u, i;
        double r;
        if (!parse_i64(tokens[0], u) || u < 1) throw ConfigError(where + ": field 1 (user): bad id '" + tokens[0] + "'");
        if (!parse_i64(tokens[1], i) || i < 1) throw ConfigError(where + ": field 2 (item): bad id '" + tokens[1] + "'");
        if (!parse_f64(tokens[2], r)) throw ConfigError(where + ": field 3 (rating): not a number '" + tokens[2] + "'");
        if (!on_scale(r, scale)) {
            throw ConfigError(where + ": field 3 (rating): " + tokens[2] + " outside the " +
                              std::to_string(scale.min_value) + ".." + std::to_string(scale.max_value) +
                              " scale with step " + std::to_string(scale.step));
        }
        users.push_back(u);
        items.push_back(i);
        ratings.push_back(r);
    }
    if (ratings.empty()) throw ConfigError(path + ": no ratings found");

    auto dense_map = [](const std::vector<Index>& ids) {
        std::vector<Index> sorted(ids);
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        return sorted;
    };
    RatingsDataset ds;
    ds.user_ids = dense_map(users);
    ds.item_ids = dense_map(items);
    ds.scale = scale;

    auto dense_index = [](const std::vector<Index>& sorted, Index id) {
        return static_cast<Index>(std::lower_bound(sorted.begin(), sorted.end(), id) - sorted.begin()) + 1;
    };
    std::vector<Index> flat;
    flat.reserve(ratings.size() * 2);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(ratings.size() * 2);
    const auto n_items = static_cast<std::uint64_t>(ds.item_ids.size());
    for (std::size_t e = 0; e < ratings.size(); ++e) {
        const Index u = dense_index(ds.user_ids, users[e]);
        const Index i = dense_index(ds.item_ids, items[e]);
        const std::uint64_t key = static_cast<std::uint64_t>(u - 1) * n_items + static_cast<std::uint64_t>(i - 1);
        if (!seen.insert(key).second) {
            throw ConfigError(path + ": duplicate rating for user " + std::to_string(users[e]) +
                              ", item " + std::to_string(items[e]));
        }
        flat.push_back(u);
        flat.push_back(i);
    }
    ds.matrix = SparseTensor(Shape({static_cast<Index>(ds.user_ids.size()),
                                    static_cast<Index>(ds.item_ids.size())}),
                             std::move(flat), std::move(ratings));
    return ds;
}

SyntheticInstance generate(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.shape.dim() == 0) throw ConfigError("synthetic spec needs a shape");
    if (!(spec.known_fraction > 0.0) || spec.known_fraction > 1.0) {
        throw ConfigError("known_fraction must be in (0, 1]");
    }
    if (!(spec.factor_min <= spec.factor_max)) throw ConfigError("factor range is empty");
    if (spec.model == SyntheticModel::multiplicative && !(spec.factor_min > 0.0)) {
        throw ConfigError("multiplicative model requires positive factors");
    }
    if (spec.discretize && !(spec.discretize->step > 0.0)) {
        throw ConfigError("discretization step must be positive");
    }

    const Shape& shape = spec.shape;
    const Index d = shape.dim();
    const Index cells = shape.cells();
    Rng rng(seed);

    // draw order is fixed: factors by dimension, noise by cell, then the mask
    std::vector<std::vector<double>> factors(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) {
        auto& f = factors[static_cast<std::size_t>(j)];
        f.resize(static_cast<std::size_t>(shape.extent(j)));
        for (double& x : f) x = rng.uniform(spec.factor_min, spec.factor_max);
    }

    std::vector<Index> flat;
    flat.reserve(static_cast<std::size_t>(cells * d));
    std::vector<double> truth_values;
    truth_values.reserve(static_cast<std::size_t>(cells));
    Coord c(static_cast<std::size_t>(d), 1);
    do {
        double v = spec.model == SyntheticModel::additive ? 0.0 : 1.0;
        for (Index j = 0; j < d; ++j) {
            const double f = factors[static_cast<std::size_t>(j)][static_cast<std::size_t>(c[static_cast<std::size_t>(j)] - 1)];
            if (spec.model == SyntheticModel::additive) {
                v += f;
            } else {
                v *= f;
            }
        }
        if (spec.noise_std > 0.0) {
            if (spec.model == SyntheticModel::additive) {
                v += rng.normal(0.0, spec.noise_std);
            } else {
                v *= std::exp(rng.normal(0.0, spec.noise_std));
            }
        }
        if (spec.discretize) {
            const RatingScale& s = *spec.discretize;
            v = s.min_value + static_cast<double>(std::llround((v - s.min_value) / s.step)) * s.step;
            v = std::clamp(v, s.min_value, s.max_value);
        }
        flat.insert(flat.end(), c.begin(), c.end());
        truth_values.push_back(v);
    } while (shape.next_coord(c));

    std::vector<Index> perm(static_cast<std::size_t>(cells));
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm);
    const auto n_known = static_cast<std::size_t>(spec.known_fraction * static_cast<double>(cells));

    std::vector<bool> known(static_cast<std::size_t>(cells), false);
    for (std::size_t i = 0; i < n_known; ++i) known[static_cast<std::size_t>(perm[i])] = true;
    if (spec.ensure_full_support) {
        // keep the far shell known: every cell with some coordinate at its
        // extent; interior unknowns then have the witness s = extents - alpha
        Coord a(static_cast<std::size_t>(d), 1);
        Index lin = 0;
        do {
            bool shell = false;
            for (Index j = 0; j < d && !shell; ++j) {
                shell = a[static_cast<std::size_t>(j)] == shape.extent(j);
            }
            if (shell) known[static_cast<std::size_t>(lin)] = true;
            ++lin;
        } while (shape.next_coord(a));
    }

    std::vector<Index> masked_flat;
    std::vector<double> masked_values;
    for (Index lin = 0; lin < cells; ++lin) {
        if (!known[static_cast<std::size_t>(lin)]) continue;
        const std::size_t off = static_cast<std::size_t>(lin) * static_cast<std::size_t>(d);
        masked_flat.insert(masked_flat.end(), flat.begin() + static_cast<std::ptrdiff_t>(off),
                           flat.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(d)));
        masked_values.push_back(truth_values[static_cast<std::size_t>(lin)]);
    }

    SyntheticInstance inst;
    inst.truth = SparseTensor(shape, std::move(flat), std::move(truth_values));
    inst.masked = SparseTensor(shape, std::move(masked_flat), std::move(masked_values));
    return inst;
}

TrainTestSplit::TrainTestSplit(Shape shape, std::vector<Index> train_flat,
                               std::vector<double> train_values,
                               std::vector<std::pair<Coord, double>> test)
    : shape_(std::move(shape)),
      train_flat_(std::move(train_flat)),
      train_values_(std::move(train_values)),
      test_(std::move(test)) {}

Index TrainTestSplit::train_size() const { return static_cast<Index>(train_values_.size()); }

SparseTensor TrainTestSplit::train_at(double sweep_fraction) const {
    if (!(sweep_fraction > 0.0) || sweep_fraction > 1.0) {
        throw ConfigError("sweep fraction must be in (0, 1]");
    }
    const auto d = static_cast<std::size_t>(shape_.dim());
    const auto n = static_cast<std::size_t>(sweep_fraction * static_cast<double>(train_values_.size()));
    std::vector<Index> flat(train_flat_.begin(), train_flat_.begin() + static_cast<std::ptrdiff_t>(n * d));
    std::vector<double> vals(train_values_.begin(), train_values_.begin() + static_cast<std::ptrdiff_t>(n));
    return SparseTensor(shape_, std::move(flat), std::move(vals));
}

TrainTestSplit split(const SparseTensor& t, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0) || spec.test_fraction >= 1.0) {
        throw ConfigError("test_fraction must be in (0, 1)");
    }
    const Index n = t.known_count();
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(spec.seed);
    rng.shuffle(perm);

    const auto n_test = static_cast<std::size_t>(spec.test_fraction * static_cast<double>(n));
    const auto d = static_cast<std::size_t>(t.dim());
    std::vector<std::pair<Coord, double>> test;
    test.reserve(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
        const auto c = t.coord(perm[i]);
        test.emplace_back(Coord(c.begin(), c.end()), t.value(perm[i]));
    }
    std::vector<Index> train_flat;
    train_flat.reserve((static_cast<std::size_t>(n) - n_test) * d);
    std::vector<double> train_values;
    train_values.reserve(static_cast<std::size_t>(n) - n_test);
    for (std::size_t i = n_test; i < static_cast<std::size_t>(n); ++i) {
        const auto c = t.coord(perm[i]);
        train_flat.insert(train_flat.end(), c.begin(), c.end());
        train_values.push_back(t.value(perm[i]));
    }
    return TrainTestSplit(t.shape(), std::move(train_flat), std::move(train_values), std::move(test));
}

TrainTestSplit split(const RatingsDataset& ds, const SplitSpec& spec) {
    return split(ds.matrix, spec);
}

Index cold_slice_count(const SparseTensor& t, Index dim) {
    if (dim < 1 || dim > t.dim()) throw ConfigError("dimension out of range");
    std::vector<bool> seen(static_cast<std::size_t>(t.shape().extent(dim - 1)), false);
    for (Index e = 0; e < t.known_count(); ++e) {
        seen[static_cast<std::size_t>(t.coord(e)[static_cast<std::size_t>(dim - 1)] - 1)] = true;
    }
    return static_cast<Index>(std::count(seen.begin(), seen.end(), false));
}

}  // namespace shiftrec
