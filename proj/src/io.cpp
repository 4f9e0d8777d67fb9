#include "gradsim/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gradsim/errors.hpp"

namespace gradsim {

namespace {

constexpr std::string_view kCheckpointMagic = "GRADSIM v1";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
}

std::size_t parse_size(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("malformed " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

void append_f64_le(std::string& out, std::span<const double> values) {
  const std::size_t start = out.size();
  out.resize(start + 8 * values.size());
  char* dst = out.data() + start;
  for (double v : values) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
    std::memcpy(dst, &bits, 8);
    dst += 8;
  }
}

std::vector<double> read_f64_le(std::string_view bytes, std::size_t count) {
  if (bytes.size() < 8 * count) throw UsageError("truncated float64 payload");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes.data() + 8 * i, 8);
    values[i] = std::bit_cast<double>(to_le(bits));
  }
  return values;
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_size(text.substr(0, comma), "integer list"));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw UsageError("empty integer list");
  return out;
}

namespace {

// Non-comment lines split into whitespace-separated unsigned integers.
std::vector<std::vector<std::size_t>> parse_lines(std::string_view text, std::string_view what) {
  std::vector<std::vector<std::size_t>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    std::vector<std::size_t> row;
    std::size_t pos = first;
    while (pos < line.size()) {
      std::size_t value = 0;
      const auto [end, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
      if (ec != std::errc{}) {
        throw UsageError("malformed " + std::string(what) + " at line " + std::to_string(line_no));
      }
      row.push_back(value);
      pos = static_cast<std::size_t>(end - line.data());
      pos = line.find_first_not_of(" \t", pos);
      if (pos == std::string_view::npos) break;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_index_list(std::span<const std::size_t> indices) {
  std::string out;
  for (std::size_t i : indices) out += std::to_string(i) + '\n';
  return out;
}

std::vector<std::size_t> parse_index_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& row : parse_lines(text, "index list")) {
    if (row.size() != 1) throw UsageError("index list lines must hold exactly one index");
    out.push_back(row[0]);
  }
  return out;
}

std::string format_pair_list(std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::string out;
  for (const auto& [i, j] : pairs) out += std::to_string(i) + ' ' + std::to_string(j) + '\n';
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pair_list(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& row : parse_lines(text, "pair list")) {
    if (row.size() != 2) throw UsageError("pair list lines must hold exactly two indices");
    out.emplace_back(row[0], row[1]);
  }
  return out;
}

std::string encode_checkpoint(const Parameters& params) {
  const auto& cfg = params.config();
  std::ostringstream header;
  header << kCheckpointMagic << " d=" << cfg.input_dim << " layers=";
  for (std::size_t k = 0; k < cfg.hidden_sizes.size(); ++k) {
    if (k) header << ',';
    header << cfg.hidden_sizes[k];
  }
  header << '\n';
  std::string out = header.str();
  append_f64_le(out, params.flat());
  return out;
}

Parameters decode_checkpoint(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw UsageError("checkpoint has no header line");
  std::string_view header = bytes.substr(0, newline);
  if (!header.starts_with(kCheckpointMagic)) throw UsageError("not a GRADSIM v1 checkpoint");
  header.remove_prefix(kCheckpointMagic.size());

  NetworkConfig cfg;
  bool have_d = false, have_layers = false;
  std::istringstream fields{std::string(header)};
  std::string field;
  while (fields >> field) {
    std::string_view f = field;
    if (f.starts_with("d=")) {
      cfg.input_dim = parse_size(f.substr(2), "input dimension");
      have_d = true;
    } else if (f.starts_with("layers=")) {
      cfg.hidden_sizes = parse_size_list(f.substr(7));
      have_layers = true;
    } else {
      throw UsageError("unknown checkpoint header field '" + field + "'");
    }
  }
  if (!have_d || !have_layers) throw UsageError("checkpoint header is missing d= or layers=");
  cfg.validate();

  const std::string_view payload = bytes.substr(newline + 1);
  const std::size_t count = cfg.parameter_count();
  if (payload.size() != 8 * count) {
    throw UsageError("checkpoint payload has " + std::to_string(payload.size()) +
                     " bytes, expected " + std::to_string(8 * count));
  }
  return Parameters(cfg, read_f64_le(payload, count));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UsageError("write failed for '" + path.string() + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Parameters& params) {
  write_file(path, encode_checkpoint(params));
}

Parameters load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

std::string git_blob_hash(std::string_view content) {
  const std::string prefix = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, prefix.data(), prefix.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);

  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

}  // namespace gradsim
