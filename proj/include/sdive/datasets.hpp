// Classical datasets shipped with the CLI plus CSV ingestion. Shipped data
// self-validate against their normal MLE fingerprints at load time.
#pragma once

#include <string>
#include <vector>

#include "sdive/common.hpp"

namespace sdive {

struct Dataset {
    std::string name;
    std::vector<double> values;
    std::string provenance;
};

// name in {short, newcomb} or a path to a CSV file (one value per line,
// '#' comments allowed).
Dataset load_dataset(const std::string& name_or_path);

Dataset load_csv(const std::string& path);

}  // namespace sdive
