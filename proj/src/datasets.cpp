#include "sdive/datasets.hpp"

#include <cmath>
#include <fstream>

namespace sdive {

namespace {

// Short's 1763 determinations of the solar parallax, Stigler (1977) Data
// Set 2. Contains the famous low outlier 5.76.
const std::vector<double> kShortData = {
    8.65, 8.35, 8.71, 8.31, 8.36, 8.58, 7.80, 7.71, 8.30,
    9.71, 8.50, 8.28, 9.87, 8.86, 5.76, 8.44, 8.23,
};

// Newcomb's passage-time measurements of light, Stigler (1977) Table 5;
// deviations in units of 1e-3 microseconds from 24.8 microseconds.
const std::vector<double> kNewcombData = {
    28, 26, 33, 24, 34, -44, 27, 16, 40, -2,  29, 22, 24, 21, 25, 30, 23,
    29, 31, 19, 24, 20, 36,  32, 36, 28, 25,  21, 28, 29, 37, 25, 28, 26,
    30, 32, 36, 26, 30, 22,  36, 23, 27, 27,  28, 27, 31, 27, 26, 33, 26,
    32, 32, 24, 39, 28, 24,  25, 32, 25, 29,  27, 28, 29, 16, 23,
};

void fingerprint_check(const Dataset& ds, double mu_ref, double sigma_ref, double tol) {
    double mean = 0.0;
    for (double v : ds.values) mean += v;
    mean /= static_cast<double>(ds.values.size());
    double ss = 0.0;
    for (double v : ds.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(ds.values.size()));
    if (std::abs(mean - mu_ref) > tol || std::abs(sd - sigma_ref) > tol)
        throw DatasetIntegrity("dataset '" + ds.name + "' failed its MLE fingerprint check");
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open data file: " + path);
    Dataset ds;
    ds.name = path;
    ds.provenance = "file: " + path;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(first, last - first + 1);
        try {
            size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            if (!std::isfinite(v)) throw std::invalid_argument(tok);
            ds.values.push_back(v);
        } catch (const std::exception&) {
            throw InvalidInput(path + ": line " + std::to_string(line_no) +
                               " is not a numeric value: '" + tok + "'");
        }
    }
    if (ds.values.empty()) throw InvalidInput(path + ": no data values found");
    return ds;
}

Dataset load_dataset(const std::string& name_or_path) {
    if (name_or_path == "short") {
        Dataset ds{"short", kShortData,
                   "Short's solar parallax determinations, Stigler (1977), Data Set 2"};
        fingerprint_check(ds, 8.378, 0.846, 0.001);
        return ds;
    }
    if (name_or_path == "newcomb") {
        Dataset ds{"newcomb", kNewcombData,
                   "Newcomb's light speed measurements, Stigler (1977), Table 5"};
        fingerprint_check(ds, 26.21, 10.66, 0.01);
        return ds;
    }
    return load_csv(name_or_path);
}

}  // namespace sdive
