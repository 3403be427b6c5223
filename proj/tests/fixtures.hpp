#pragma once

#include <cstring>
#include <string>
#include <vector>

namespace stagehand::testing {

inline const std::vector<std::string>& standard_ply_properties() {
  static const std::vector<std::string> names{"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2",
                                              "opacity", "scale_0", "scale_1", "scale_2",
                                              "rot_0", "rot_1", "rot_2", "rot_3"};
  return names;
}

// Binary little-endian PLY with float properties; `rows` holds one value per property per vertex.
inline std::vector<char> make_ply(const std::vector<std::string>& names, const std::vector<std::vector<float>>& rows,
                                  const std::string& format = "binary_little_endian 1.0") {
  std::string header = "ply\nformat " + format + "\nelement vertex " + std::to_string(rows.size()) + "\n";
  for (const auto& n : names) header += "property float " + n + "\n";
  header += "end_header\n";
  std::vector<char> bytes(header.begin(), header.end());
  for (const auto& row : rows)
    for (float v : row) {
      char b[4];
      std::memcpy(b, &v, 4);
      bytes.insert(bytes.end(), b, b + 4);
    }
  return bytes;
}

// One vertex at the origin: zero DC, opacity logit 0, unit scales, identity rotation.
inline std::vector<float> default_vertex() {
  return {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
}

inline std::vector<char> make_pfm(const std::string& header, const std::vector<float>& values) {
  std::vector<char> bytes(header.begin(), header.end());
  for (float v : values) {
    char b[4];
    std::memcpy(b, &v, 4);
    bytes.insert(bytes.end(), b, b + 4);
  }
  return bytes;
}

}  // namespace stagehand::testing
