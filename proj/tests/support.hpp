#pragma once

#include <string>

#include "sparsemeta/dataset.hpp"

namespace testing_support {

inline std::string niel_path() { return std::string(SPARSEMETA_DATA_DIR) + "/niel2007.csv"; }

inline sparsemeta::Dataset niel() {
  return sparsemeta::read_dataset_file(niel_path(), sparsemeta::Design::TwoGroupBinary);
}

}  // namespace testing_support
