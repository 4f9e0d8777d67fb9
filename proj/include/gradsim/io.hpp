#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradsim/network.hpp"

namespace gradsim {

// Checkpoint layout v1: the text line
//   GRADSIM v1 d=<d> layers=<N1,..,NL>\n
// followed by exactly 8*|theta| bytes of little-endian float64 in flat layout.
std::string encode_checkpoint(const Parameters& params);
Parameters decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Parameters& params);
Parameters load_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

void append_f64_le(std::string& out, std::span<const double> values);
std::vector<double> read_f64_le(std::string_view bytes, std::size_t count);

/// Git blob id: hex SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_hash(std::string_view content);

// Keep-set and mask files: one flat index (or one "i j" pair) per line.
// Blank lines and lines starting with '#' are ignored.
std::string format_index_list(std::span<const std::size_t> indices);
std::vector<std::size_t> parse_index_list(std::string_view text);
std::string format_pair_list(std::span<const std::pair<std::size_t, std::size_t>> pairs);
std::vector<std::pair<std::size_t, std::size_t>> parse_pair_list(std::string_view text);

/// Parse "a,b,c" into positive integers.
std::vector<std::size_t> parse_size_list(std::string_view text);

}  // namespace gradsim
