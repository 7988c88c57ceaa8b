#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cogscreen/linmodel/sparse.hpp"

namespace cogscreen::linmodel {

/// Pearson correlation. Throws DataError on length mismatch, fewer than two
/// points, or a zero-variance input.
double pcc(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of every column of X with y; nullopt where the column
/// (or y) has zero variance.
std::vector<std::optional<double>> column_pcc(const CsrMatrix& X, std::span<const double> y);

/// mask[j] = |pcc(X[:,j], y)| >= threshold; zero-variance columns are dropped.
std::vector<bool> select_features(const CsrMatrix& X, std::span<const double> y, double threshold);
std::vector<bool> mask_from_pcc(const std::vector<std::optional<double>>& pccs, double threshold);

}  // namespace cogscreen::linmodel
