#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "survtraj/datasets.hpp"
#include "survtraj/errors.hpp"

using namespace survtraj;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/survtraj_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

// Single-linkage component count at the given merge distance.
int components(const SurvivalDataset& ds, double dist) {
    const int n = static_cast<int>(ds.size());
    std::vector<int> parent(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) a = parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
        return a;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d2 = 0.0;
            for (size_t k = 0; k < ds.records[static_cast<size_t>(i)].x.size(); ++k) {
                const double d = ds.records[static_cast<size_t>(i)].x[k] - ds.records[static_cast<size_t>(j)].x[k];
                d2 += d * d;
            }
            if (d2 <= dist * dist) parent[static_cast<size_t>(find(i))] = find(j);
        }
    }
    int c = 0;
    for (int i = 0; i < n; ++i) c += find(i) == i ? 1 : 0;
    return c;
}

}  // namespace

TEST_CASE("synth_linear: noiseless points sit on their segments") {
    Rng rng(1);
    const auto ds = synth_linear(50, 0.0, rng, 0.0);
    REQUIRE(ds.size() == 100);
    for (size_t i = 0; i < 50; ++i) {
        // segment (0,0)-(4,4): x2 == x1
        CHECK(ds.records[i].x[1] == doctest::Approx(ds.records[i].x[0]).epsilon(1e-12));
    }
    for (size_t i = 50; i < 100; ++i) {
        // segment (8,0)-(12,4): x2 == x1 - 8
        CHECK(ds.records[i].x[1] == doctest::Approx(ds.records[i].x[0] - 8.0).epsilon(1e-9));
    }
}

TEST_CASE("synth_linear: two single-linkage components at the gap scale") {
    Rng rng(7);
    const auto ds = synth_linear(200, 0.15, rng);
    CHECK(ds.size() == 400);
    CHECK(components(ds, 2.0) == 2);
}

TEST_CASE("synthetic generators are seed-deterministic and valid") {
    Rng a(9), b(9);
    const auto da = synth_linear(30, 0.15, a);
    const auto db = synth_linear(30, 0.15, b);
    REQUIRE(da.size() == db.size());
    for (size_t i = 0; i < da.size(); ++i) {
        CHECK(da.records[i].x == db.records[i].x);
        CHECK(da.records[i].time == db.records[i].time);
        CHECK(da.records[i].event == db.records[i].event);
    }
    da.validate();

    Rng c(10), d(10);
    const auto pa = synth_two_parabolas(20, 0.1, c);
    const auto pb = synth_two_parabolas(20, 0.1, d);
    for (size_t i = 0; i < pa.size(); ++i) CHECK(pa.records[i].time == pb.records[i].time);
    pa.validate();

    Rng e(11), f(11);
    const auto ca = synth_two_circles(20, 0.05, e);
    const auto cb = synth_two_circles(20, 0.05, f);
    for (size_t i = 0; i < ca.size(); ++i) CHECK(ca.records[i].x == cb.records[i].x);
    ca.validate();
}

TEST_CASE("synth_two_parabolas: exact arcs and time-feature correlation at zero noise") {
    Rng rng(2);
    const auto ds = synth_two_parabolas(60, 0.0, rng, 0.0);
    REQUIRE(ds.size() == 120);
    for (size_t i = 0; i < 60; ++i) {
        CHECK(ds.records[i].x[1] ==
              doctest::Approx(0.5 * ds.records[i].x[0] * ds.records[i].x[0] - 1.0).epsilon(1e-9));
    }
    for (size_t i = 60; i < 120; ++i) {
        CHECK(ds.records[i].x[1] ==
              doctest::Approx(-0.5 * ds.records[i].x[0] * ds.records[i].x[0] + 1.0).epsilon(1e-9));
    }
    // correlation(T, x1) within a cluster is exactly 1
    double sx = 0, st = 0, sxx = 0, stt = 0, sxt = 0;
    for (size_t i = 0; i < 60; ++i) {
        const double x = ds.records[i].x[0], t = ds.records[i].time;
        sx += x;
        st += t;
        sxx += x * x;
        stt += t * t;
        sxt += x * t;
    }
    const double n = 60.0;
    const double corr = (sxt - sx * st / n) / std::sqrt((sxx - sx * sx / n) * (stt - st * st / n));
    CHECK(corr == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synth_two_circles: exact radii at zero noise, tight times within circles") {
    Rng rng(3);
    const auto zero_noise = synth_two_circles(40, 0.0, rng, 0.0);
    for (size_t i = 0; i < 40; ++i) {
        const double r = std::hypot(zero_noise.records[i].x[0], zero_noise.records[i].x[1]);
        CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (size_t i = 40; i < 80; ++i) {
        const double r = std::hypot(zero_noise.records[i].x[0], zero_noise.records[i].x[1]);
        CHECK(r == doctest::Approx(1.15).epsilon(1e-12));
    }

    Rng rng2(4);
    const auto ds = synth_two_circles(200, 0.05, rng2);
    // event-time variance within each circle is tiny next to the squared gap
    // between the base times
    double gap = 100.0 - 10.0;
    for (int c = 0; c < 2; ++c) {
        double s = 0, ss = 0;
        int k = 0;
        for (int i = c * 200; i < (c + 1) * 200; ++i) {
            if (ds.records[static_cast<size_t>(i)].event != 1) continue;
            s += ds.records[static_cast<size_t>(i)].time;
            ss += ds.records[static_cast<size_t>(i)].time * ds.records[static_cast<size_t>(i)].time;
            ++k;
        }
        const double var = ss / k - (s / k) * (s / k);
        CHECK(var / (gap * gap) < 0.01);
    }
}

TEST_CASE("csv round trip is field-exact") {
    TempFile f("roundtrip.csv");
    Rng rng(5);
    const auto ds = synth_linear(25, 0.15, rng);
    const DataSchema schema = synth_schema();
    save_csv(ds, schema, f.path);
    const auto back = load_csv(f.path, schema);
    REQUIRE(back.size() == ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.records[i].x == ds.records[i].x);
        CHECK(back.records[i].time == ds.records[i].time);
        CHECK(back.records[i].event == ds.records[i].event);
    }
}

TEST_CASE("csv parses a hand-written file exactly") {
    TempFile f("hand.csv");
    {
        std::ofstream out(f.path);
        out << "x1,x2,time,event\n";
        out << "1.5,2.25,3,1\n";
        out << "-0.5,0,1.25,0\n";
        out << "4,5,0,1\n";
    }
    const auto ds = load_csv(f.path, synth_schema());
    REQUIRE(ds.size() == 3);
    CHECK(ds.records[0].x == std::vector<double>{1.5, 2.25});
    CHECK(ds.records[0].time == 3.0);
    CHECK(ds.records[0].event == 1);
    CHECK(ds.records[1].event == 0);
    CHECK(ds.records[2].time == 0.0);
}

TEST_CASE("csv errors carry row and column positions") {
    TempFile f("bad.csv");
    {
        std::ofstream out(f.path);
        out << "x1,x2,time,event\n";
        out << "1,2,3,1\n";
        out << "1,2,3,2\n";
    }
    try {
        (void)load_csv(f.path, synth_schema());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("event") != std::string::npos);
    }

    TempFile g("badnum.csv");
    {
        std::ofstream out(g.path);
        out << "x1,x2,time,event\n";
        out << "1,abc,3,1\n";
    }
    CHECK_THROWS_AS((void)load_csv(g.path, synth_schema()), DataError);

    TempFile h("negtime.csv");
    {
        std::ofstream out(h.path);
        out << "x1,x2,time,event\n";
        out << "1,2,-3,1\n";
    }
    CHECK_THROWS_AS((void)load_csv(h.path, synth_schema()), DataError);

    TempFile m("missing.csv");
    {
        std::ofstream out(m.path);
        out << "x1,time,event\n";
        out << "1,3,1\n";
    }
    CHECK_THROWS_AS((void)load_csv(m.path, synth_schema()), DataError);
}

TEST_CASE("one-hot encoding round-trips categories") {
    TempFile f("cat.csv");
    {
        std::ofstream out(f.path);
        out << "grade,size,time,event\n";
        out << "low,1.5,3,1\n";
        out << "high,2.5,4,0\n";
        out << "mid,0.5,5,1\n";
    }
    DataSchema schema;
    schema.features = {{"grade", FeatureKind::categorical, {"low", "mid", "high"}},
                       {"size", FeatureKind::continuous, {}}};
    const auto ds = load_csv(f.path, schema);
    REQUIRE(ds.records[0].x.size() == 4);
    CHECK(ds.records[0].x == std::vector<double>{1, 0, 0, 1.5});
    CHECK(ds.records[1].x == std::vector<double>{0, 0, 1, 2.5});

    TempFile g("cat_back.csv");
    save_csv(ds, schema, g.path);
    const auto back = load_csv(g.path, schema);
    for (size_t i = 0; i < ds.size(); ++i) CHECK(back.records[i].x == ds.records[i].x);

    // unseen category names the row and column
    TempFile h("cat_bad.csv");
    {
        std::ofstream out(h.path);
        out << "grade,size,time,event\n";
        out << "huge,1.5,3,1\n";
    }
    CHECK_THROWS_AS((void)load_csv(h.path, schema), DataError);
}

TEST_CASE("standardization: z-scored train, exact inverse, train stats reused") {
    Rng rng(6);
    auto train = synth_linear(100, 0.15, rng);
    DataSchema schema = synth_schema();
    fit_standardization(schema, train);
    const auto std_train = standardize(train, schema);

    const int n = static_cast<int>(std_train.size());
    for (int c = 0; c < 2; ++c) {
        double s = 0, ss = 0;
        for (const auto& rec : std_train.records) {
            s += rec.x[static_cast<size_t>(c)];
            ss += rec.x[static_cast<size_t>(c)] * rec.x[static_cast<size_t>(c)];
        }
        CHECK(std::abs(s / n) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / n - (s / n) * (s / n)) - 1.0) < 1e-9);
    }

    const std::vector<double> x{2.5, -1.25};
    const auto roundtrip = destandardize_row(standardize_row(x, schema), schema);
    CHECK(std::abs(roundtrip[0] - x[0]) < 1e-12);
    CHECK(std::abs(roundtrip[1] - x[1]) < 1e-12);

    // a holdout standardized with training statistics keeps its offset
    SurvivalDataset shifted;
    shifted.records.push_back({{100.0, 100.0}, 1.0, 1});
    const auto std_shifted = standardize(shifted, schema);
    CHECK(std_shifted.records[0].x[0] > 10.0);  // far off the training mean
}

TEST_CASE("constant columns are rejected at fit") {
    SurvivalDataset ds;
    ds.records.push_back({{1.0, 5.0}, 1.0, 1});
    ds.records.push_back({{2.0, 5.0}, 2.0, 1});
    DataSchema schema = synth_schema();
    CHECK_THROWS_AS(fit_standardization(schema, ds), DataError);
}

TEST_CASE("schema json round trip") {
    DataSchema schema;
    schema.features = {{"grade", FeatureKind::categorical, {"a", "b"}},
                       {"size", FeatureKind::continuous, {}}};
    schema.time_name = "t";
    schema.event_name = "d";
    const auto text = schema_to_json_string(schema);
    const auto back = schema_from_json_string(text);
    CHECK(back.features.size() == 2);
    CHECK(back.features[0].categories == std::vector<std::string>{"a", "b"});
    CHECK(back.time_name == "t");
    CHECK(back.event_name == "d");
    CHECK_THROWS_AS((void)schema_from_json_string("{not json"), DataError);
}
