#include "latpde/flow_series.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

using namespace latpde;

namespace {

FlowSeries random_series(std::size_t nx, std::size_t ny, std::size_t nt,
                         std::uint64_t seed) {
    FlowSeries s = noise_field({nx, ny, nt, 0.1, 0.2, 0.5}, {1.0, seed});
    return s;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("grid invariants are enforced", "[flow]") {
    CHECK_THROWS_AS((GridSpec{0, 4, 4, 1, 1, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((GridSpec{4, 4, 4, -1, 1, 1}).validate(), std::invalid_argument);
    GridSpec g{4, 5, 6, 0.5, 0.25, 2.0};
    g.validate();
    CHECK(g.lx() == 2.0);
    CHECK(g.ly() == 1.25);
}

TEST_CASE("zero-amplitude noise returns an identical series", "[flow]") {
    FlowSeries s = random_series(8, 7, 6, 1);
    FlowSeries out = add_noise(s, {0.0, 99});
    for (std::size_t n = 0; n < s.u.size(); ++n) {
        CHECK(out.u.data()[n] == s.u.data()[n]);
        CHECK(out.v.data()[n] == s.v.data()[n]);
    }
}

TEST_CASE("noise statistics match sigma on a large field", "[flow]") {
    // law-of-large-numbers bound for >= 1e6 entries
    GridSpec g{100, 100, 100, 1, 1, 1};
    FlowSeries zero;
    zero.grid = g;
    zero.u = Field3(100, 100, 100);
    zero.v = Field3(100, 100, 100);
    const double sigma = 1e-3;
    FlowSeries noisy = add_noise(zero, {sigma, 7});
    double sum = 0.0, sum2 = 0.0;
    const std::size_t n = noisy.u.size() + noisy.v.size();
    for (std::size_t i = 0; i < noisy.u.size(); ++i) {
        sum += noisy.u.data()[i];
        sum2 += noisy.u.data()[i] * noisy.u.data()[i];
    }
    for (std::size_t i = 0; i < noisy.v.size(); ++i) {
        sum += noisy.v.data()[i];
        sum2 += noisy.v.data()[i] * noisy.v.data()[i];
    }
    double mean = sum / n;
    double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(sd > 0.95e-3);
    CHECK(sd < 1.05e-3);
    CHECK(std::abs(mean) < 5.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("noise is deterministic per seed and differs across seeds", "[flow]") {
    FlowSeries s = random_series(6, 6, 6, 2);
    FlowSeries a1 = add_noise(s, {1e-3, 42});
    FlowSeries a2 = add_noise(s, {1e-3, 42});
    FlowSeries b = add_noise(s, {1e-3, 43});
    bool identical = true, differs = false;
    for (std::size_t n = 0; n < s.u.size(); ++n) {
        identical = identical && a1.u.data()[n] == a2.u.data()[n];
        differs = differs || a1.u.data()[n] != b.u.data()[n];
    }
    CHECK(identical);
    CHECK(differs);
    CHECK(b.grid == s.grid);
}

TEST_CASE("subtracting the same seeded stream recovers the field", "[flow]") {
    FlowSeries s = random_series(6, 5, 9, 3);
    NoiseSpec spec{1e-2, 11};
    FlowSeries noisy = add_noise(s, spec);
    FlowSeries stream = noise_field(s.grid, spec);
    for (std::size_t n = 0; n < s.u.size(); ++n) {
        double back = noisy.u.data()[n] - stream.u.data()[n];
        CHECK(back == Catch::Approx(s.u.data()[n]).margin(1e-15));
    }
    // on a zero field the round trip is exact
    FlowSeries zero;
    zero.grid = s.grid;
    zero.u = Field3(s.grid.nx, s.grid.ny, s.grid.nt);
    zero.v = Field3(s.grid.nx, s.grid.ny, s.grid.nt);
    FlowSeries nz = add_noise(zero, spec);
    for (std::size_t n = 0; n < zero.u.size(); ++n)
        CHECK(nz.u.data()[n] - stream.u.data()[n] == 0.0);
}

TEST_CASE("temporal subsampling keeps every stride-th snapshot", "[flow]") {
    FlowSeries s = random_series(4, 4, 100, 4);
    FlowSeries sub = subsample_time(s, 25);
    CHECK(sub.grid.nt == 4);
    CHECK(sub.grid.dt == Catch::Approx(s.grid.dt * 25));
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(sub.u(1, 2, k) == s.u(1, 2, 25 * k));

    FlowSeries same = subsample_time(s, 1);
    CHECK(same.grid.nt == s.grid.nt);
    CHECK(same.u(3, 3, 99) == s.u(3, 3, 99));

    FlowSeries s34 = random_series(4, 4, 34, 5);
    CHECK_THROWS_AS(subsample_time(s34, 35), std::invalid_argument);
}

TEST_CASE("subsampling composes: stride a*b equals two passes", "[flow]") {
    FlowSeries s = random_series(3, 3, 61, 6);
    FlowSeries once = subsample_time(s, 6);
    FlowSeries twice = subsample_time(subsample_time(s, 2), 3);
    REQUIRE(once.grid.nt == twice.grid.nt);
    CHECK(once.grid.dt == Catch::Approx(twice.grid.dt));
    for (std::size_t k = 0; k < once.grid.nt; ++k)
        CHECK(once.u(1, 1, k) == twice.u(1, 1, k));
}

TEST_CASE("KFLD round trip is bit exact", "[flow]") {
    TempFile f("latpde_roundtrip.kfld");
    FlowSeries s = random_series(5, 7, 3, 8);
    write_series(s, f.path);
    FlowSeries r = read_series(f.path);
    CHECK(r.grid == s.grid);
    for (std::size_t n = 0; n < s.u.size(); ++n) {
        CHECK(r.u.data()[n] == s.u.data()[n]);
        CHECK(r.v.data()[n] == s.v.data()[n]);
    }
}

TEST_CASE("KFLD rejects bad magic, bad version, truncation distinctly", "[flow]") {
    TempFile f("latpde_bad.kfld");
    FlowSeries s = random_series(4, 4, 2, 9);
    write_series(s, f.path);

    auto corrupt = [&](std::size_t offset, char value) {
        std::fstream io(f.path, std::ios::in | std::ios::out | std::ios::binary);
        io.seekp(static_cast<std::streamoff>(offset));
        io.write(&value, 1);
    };

    corrupt(0, 'X');
    CHECK_THROWS_WITH(read_series(f.path), Catch::Matchers::ContainsSubstring("bad magic"));

    write_series(s, f.path);
    corrupt(4, 9);
    CHECK_THROWS_WITH(read_series(f.path),
                      Catch::Matchers::ContainsSubstring("version mismatch"));

    write_series(s, f.path);
    std::filesystem::resize_file(f.path, 56 + 100);
    CHECK_THROWS_WITH(read_series(f.path), Catch::Matchers::ContainsSubstring("truncated"));
}
