#include <zlib.h>

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "shiftrec/io.hpp"

using namespace shiftrec;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("coo round-trip is exact") {
    auto inst = generate({Shape({4, 6}), SyntheticModel::additive, -2.0, 3.0, 0.7, 0.5}, 23);
    TempDir dir;
    const std::string path = dir.file("t.coo");
    write_coo(inst.masked, path);
    auto back = read_coo(path);
    REQUIRE(back.known_count() == inst.masked.known_count());
    CHECK(back.shape() == inst.masked.shape());
    for (Index e = 0; e < back.known_count(); ++e) {
        CHECK(back.value(e) == inst.masked.value(e));  // bitwise via %.17g
        CHECK(back.linear(e) == inst.masked.linear(e));
    }
}

TEST_CASE("coo parser diagnostics") {
    TempDir dir;
    const std::string no_header = dir.file("a.coo");
    write_file(no_header, "1 1 2.0\n");
    CHECK_THROWS_WITH_AS(read_coo(no_header), doctest::Contains("shape"), ConfigError);

    const std::string bad_field = dir.file("b.coo");
    write_file(bad_field, "# shape 2 2\n1 x 2.0\n");
    CHECK_THROWS_WITH_AS(read_coo(bad_field), doctest::Contains(":2"), ConfigError);

    const std::string dup = dir.file("c.coo");
    write_file(dup, "# shape 2 2\n1 1 2.0\n1 1 3.0\n");
    CHECK_THROWS_AS(read_coo(dup), ConfigError);

    const std::string comments = dir.file("d.coo");
    write_file(comments, "# a comment\n# shape 2 2\n# another\n2 1 -3.5\n");
    auto t = read_coo(comments);
    CHECK(t.value_at(Coord{2, 1}) == -3.5);

    const std::string nonfinite = dir.file("e.coo");
    write_file(nonfinite, "# shape 2 2\n1 1 nan\n");
    CHECK_THROWS_AS(read_coo(nonfinite), ConfigError);

    CHECK_THROWS_AS(read_coo(dir.file("missing.coo")), ConfigError);
}

TEST_CASE("gzip-compressed input is read transparently") {
    TempDir dir;
    const std::string path = dir.file("t.coo.gz");
    const std::string body = "# shape 2 3\n1 2 4.5\n2 3 -1.25\n";
    gzFile f = gzopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    gzwrite(f, body.data(), static_cast<unsigned>(body.size()));
    gzclose(f);
    auto t = read_coo(path);
    CHECK(t.known_count() == 2);
    CHECK(t.value_at(Coord{1, 2}) == 4.5);
}

TEST_CASE("completed full-grid coo streams every cell") {
    auto t = testutil::sparse_matrix(2, 3, {{1, 1, 1.0}, {1, 2, 2.0}, {2, 1, 3.0}, {2, 3, 5.0}});
    auto c = scca(t, 1);
    TempDir dir;
    const std::string path = dir.file("full.coo");
    write_completed_coo(c, path);
    auto back = read_coo(path);
    CHECK(back.known_count() == 6);
    Coord coord{1, 1};
    do {
        CHECK(*back.value_at(coord) == doctest::Approx(c.value(coord)).epsilon(1e-15));
    } while (t.shape().next_coord(coord));
}

TEST_CASE("ml100k parsing with dense remapping") {
    TempDir dir;
    const std::string path = dir.file("u.data");
    // external ids 7 and 3 remap to dense 2 and 1
    write_file(path,
               "7\t10\t3\t874965758\n"
               "3\t10\t4\t876893171\n"
               "3\t20\t1\t878542960\n");
    auto ds = parse_movielens(path, MovieLensFlavor::ml100k);
    CHECK(ds.user_count() == 2);
    CHECK(ds.item_count() == 2);
    CHECK(ds.rating_count() == 3);
    CHECK(ds.user_ids == std::vector<Index>{3, 7});
    CHECK(ds.item_ids == std::vector<Index>{10, 20});
    CHECK(ds.matrix.value_at(Coord{2, 1}) == 3.0);  // user 7, item 10
    CHECK(ds.matrix.value_at(Coord{1, 2}) == 1.0);  // user 3, item 20
    CHECK(ds.sparsity() == doctest::Approx(0.25));
}

TEST_CASE("ml1m parsing uses :: separators") {
    TempDir dir;
    const std::string path = dir.file("ratings.dat");
    write_file(path, "1::1193::5::978300760\n1::661::3::978302109\n2::1193::4::978298413\n");
    auto ds = parse_movielens(path, MovieLensFlavor::ml1m);
    CHECK(ds.user_count() == 2);
    CHECK(ds.item_count() == 2);
    CHECK(ds.matrix.value_at(Coord{1, 2}) == 5.0);  // item 1193 densifies after 661
}

TEST_CASE("movielens parse errors name the line and field") {
    TempDir dir;
    const std::string bad_rating = dir.file("r.dat");
    write_file(bad_rating, "1::5::x::978300760\n");
    CHECK_THROWS_WITH_AS(parse_movielens(bad_rating, MovieLensFlavor::ml1m),
                         doctest::Contains("field 3 (rating)"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_movielens(bad_rating, MovieLensFlavor::ml1m),
                         doctest::Contains(":1"), ConfigError);

    const std::string off_scale = dir.file("s.data");
    write_file(off_scale, "1\t1\t9\t874965758\n");
    CHECK_THROWS_WITH_AS(parse_movielens(off_scale, MovieLensFlavor::ml100k),
                         doctest::Contains("scale"), ConfigError);

    // half-star ratings are fine for ml10m, off-lattice for ml1m
    const std::string half = dir.file("h.dat");
    write_file(half, "1::2::3.5::12345\n");
    CHECK_THROWS_AS(parse_movielens(half, MovieLensFlavor::ml1m), ConfigError);
    auto ds = parse_movielens(half, MovieLensFlavor::ml10m);
    CHECK(ds.matrix.value_at(Coord{1, 1}) == 3.5);

    const std::string dup = dir.file("dup.data");
    write_file(dup, "1\t1\t3\t1\n1\t1\t4\t2\n");
    CHECK_THROWS_WITH_AS(parse_movielens(dup, MovieLensFlavor::ml100k),
                         doctest::Contains("duplicate"), ConfigError);

    const std::string short_line = dir.file("short.data");
    write_file(short_line, "1\t1\t3\n");
    CHECK_THROWS_WITH_AS(parse_movielens(short_line, MovieLensFlavor::ml100k),
                         doctest::Contains("4 fields"), ConfigError);
}

TEST_CASE("generator determinism and masking") {
    SyntheticSpec spec{Shape({5, 7}), SyntheticModel::additive, 0.0, 2.0, 0.3, 0.4};
    auto a = generate(spec, 99);
    auto b = generate(spec, 99);
    REQUIRE(a.masked.known_count() == b.masked.known_count());
    for (Index e = 0; e < a.masked.known_count(); ++e) {
        CHECK(a.masked.value(e) == b.masked.value(e));
        CHECK(a.masked.linear(e) == b.masked.linear(e));
    }
    auto c = generate(spec, 100);
    bool identical = c.masked.known_count() == a.masked.known_count();
    if (identical) {
        identical = std::equal(a.masked.values().begin(), a.masked.values().end(),
                               c.masked.values().begin());
    }
    CHECK(!identical);

    // known fraction 1.0 keeps everything
    spec.known_fraction = 1.0;
    auto full = generate(spec, 7);
    CHECK(full.masked.known_count() == full.truth.known_count());
    CHECK(full.masked.known_count() == 35);
}

TEST_CASE("nested masks when only the known fraction changes") {
    SyntheticSpec lo{Shape({6, 6}), SyntheticModel::additive, 0.0, 2.0, 0.1, 0.3};
    SyntheticSpec hi = lo;
    hi.known_fraction = 0.8;
    auto a = generate(lo, 5);
    auto b = generate(hi, 5);
    for (Index e = 0; e < a.masked.known_count(); ++e) {
        const auto c = a.masked.coord(e);
        CHECK(b.masked.value_at(c) == a.masked.value(e));
    }
}

TEST_CASE("discretization lands on the scale lattice") {
    SyntheticSpec spec{Shape({6, 6}), SyntheticModel::additive, 0.5, 2.5, 0.5, 0.9,
                       RatingScale{1.0, 5.0, 1.0}};
    auto inst = generate(spec, 3);
    for (double v : inst.truth.values()) {
        CHECK(v >= 1.0);
        CHECK(v <= 5.0);
        CHECK(v == std::floor(v));
    }
}

TEST_CASE("full-support masks certify") {
    SyntheticSpec spec{Shape({6, 5}), SyntheticModel::additive, 0.0, 2.0, 0.0, 0.3, {}, true};
    auto inst = generate(spec, 12);
    // far shell stays known
    Coord c(2, 1);
    do {
        if (c[0] == 6 || c[1] == 5) CHECK(inst.masked.is_known(c));
    } while (spec.shape.next_coord(c));
}

TEST_CASE("split holds out the exact floor count deterministically") {
    auto inst = generate({Shape({20, 20}), SyntheticModel::additive, 0.0, 2.0, 0.2, 0.8}, 55);
    const Index n = inst.masked.known_count();
    SplitSpec spec;
    spec.test_fraction = 0.2;
    spec.seed = 4;
    auto s1 = split(inst.masked, spec);
    auto s2 = split(inst.masked, spec);
    CHECK(static_cast<Index>(s1.test().size()) == n / 5);
    CHECK(s1.train_size() == n - n / 5);
    REQUIRE(s1.test().size() == s2.test().size());
    for (std::size_t i = 0; i < s1.test().size(); ++i) {
        CHECK(s1.test()[i].first == s2.test()[i].first);
    }

    // sweep subsampling: floor(0.5 * train)
    auto half = s1.train_at(0.5);
    CHECK(half.known_count() == s1.train_size() / 2);

    // nested prefixes
    auto tenth = s1.train_at(0.1);
    for (Index e = 0; e < tenth.known_count(); ++e) {
        CHECK(half.is_known(tenth.coord(e)));
    }
}

TEST_CASE("split partitions the known set at full fraction") {
    auto inst = generate({Shape({9, 8}), SyntheticModel::additive, 0.0, 2.0, 0.2, 0.7}, 2);
    SplitSpec spec;
    spec.test_fraction = 0.25;
    spec.seed = 9;
    auto s = split(inst.masked, spec);
    auto train = s.train();
    CHECK(train.known_count() + static_cast<Index>(s.test().size()) == inst.masked.known_count());
    for (const auto& [c, v] : s.test()) {
        CHECK(!train.is_known(c));
        CHECK(inst.masked.value_at(c) == v);
    }
    for (Index e = 0; e < train.known_count(); ++e) {
        CHECK(inst.masked.value_at(train.coord(e)) == train.value(e));
    }
}

TEST_CASE("degenerate splits are detectable via cold slice counts") {
    // user 3 has a single rating; some seed sends it to the test side
    auto t = testutil::sparse_matrix(3, 4,
                                     {{1, 1, 1.0}, {1, 2, 2.0}, {1, 3, 1.0}, {1, 4, 2.0},
                                      {2, 1, 2.0}, {2, 2, 3.0}, {2, 3, 1.0}, {2, 4, 5.0},
                                      {3, 2, 4.0}});
    bool found = false;
    for (std::uint64_t seed = 1; seed <= 50 && !found; ++seed) {
        SplitSpec spec;
        spec.test_fraction = 0.3;
        spec.seed = seed;
        found = cold_slice_count(split(t, spec).train(), 1) > 0;
    }
    CHECK(found);
    CHECK(cold_slice_count(t, 1) == 0);
}
