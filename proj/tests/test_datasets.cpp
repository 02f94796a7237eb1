#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "sdive/datasets.hpp"
#include "sdive/model.hpp"

using namespace sdive;

TEST_CASE("shipped datasets pass their MLE fingerprints") {
    const NormalModel model;

    const Dataset shortd = load_dataset("short");
    CHECK(shortd.values.size() == 17);
    const Vector mle_s = *model.closed_form_mle(shortd.values);
    CHECK(mle_s[0] == doctest::Approx(8.378).epsilon(2e-4));
    CHECK(mle_s[1] == doctest::Approx(0.846).epsilon(2e-3));
    CHECK(shortd.provenance.find("Stigler") != std::string::npos);

    const Dataset newcomb = load_dataset("newcomb");
    CHECK(newcomb.values.size() == 66);
    const Vector mle_n = *model.closed_form_mle(newcomb.values);
    CHECK(mle_n[0] == doctest::Approx(26.21).epsilon(5e-4));
    CHECK(mle_n[1] == doctest::Approx(10.66).epsilon(1e-3));
}

TEST_CASE("csv ingestion") {
    const char* path = "test_data_tmp.csv";
    {
        std::ofstream out(path);
        out << "# comment line\n1.5\n2.5\n\n  3.5  # trailing comment\n";
    }
    const Dataset ds = load_csv(path);
    CHECK(ds.values == std::vector<double>{1.5, 2.5, 3.5});
    std::remove(path);
}

TEST_CASE("csv errors name the offending line") {
    const char* path = "test_data_bad.csv";
    {
        std::ofstream out(path);
        out << "1.0\nnot-a-number\n";
    }
    try {
        load_csv(path);
        FAIL("expected a parse error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::remove(path);
    CHECK_THROWS_AS(load_dataset("no_such_file.csv"), InvalidInput);
}
