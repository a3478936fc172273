#pragma once

#include <filesystem>
#include <iosfwd>

#include "textwalk/encoders.hpp"

namespace textwalk {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Little-endian layout:
//   "TXWK" | u32 version | u32 kind | u32 dim | u64 rows
//   rows x (u32 byte length, UTF-8 bytes)        vocabulary or node keys
//   focus side, then context side, each:
//     table (rows x dim f64, row-major)
//     forward cell  w_z w_r w_h u_z u_r u_h b_z b_r b_h   (Gru, BiGruMaxRes)
//     backward cell, same order                           (BiGruMaxRes)
void write_model(const EncoderModel& model, std::ostream& out);
EncoderModel read_model(std::istream& in);

void save_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_model(const std::filesystem::path& path);

}  // namespace textwalk
