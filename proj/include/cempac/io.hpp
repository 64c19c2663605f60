#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cempac {

std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
/// Throws InvalidInput on malformed input.
std::string base64_decode(std::string_view text);

std::string read_text_file(const std::string& path);
/// Writes atomically (temporary file + rename) so readers never see a partial file.
void write_text_file(const std::string& path, std::string_view contents);

nlohmann::json read_json_file(const std::string& path);
/// Pretty-prints with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace cempac
