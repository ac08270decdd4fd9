#pragma once
// Lossless model checkpoints: JSON text with hexadecimal float values.

#include <filesystem>
#include <iosfwd>

#include "hyres/model/model.hpp"

namespace hyres {

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Model& model, std::ostream& os);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
/// Throws std::invalid_argument on malformed or version-mismatched input.
Model load_checkpoint(std::istream& is);
Model load_checkpoint(const std::filesystem::path& path);

/// "%a" formatting and its exact inverse.
std::string hexfloat(double v);
double parse_hexfloat(const std::string& s);

}  // namespace hyres
