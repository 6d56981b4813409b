#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>

namespace nestavg {

// full double precision; rounding is the plotting layer's job
std::string fmt17(double x);

// numeric matrix, comma separated, optional header row (auto-detected)
Eigen::MatrixXd load_matrix_csv(const std::string& path);

std::string read_text(const std::string& path);
void save_text(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace nestavg
