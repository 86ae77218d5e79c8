#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gpta::text {

bool is_space(char c);
std::string trim(std::string_view s);
// ASCII lowercase; bytes >= 0x80 pass through unchanged.
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// printf("%.*f") without locale surprises.
std::string fixed(double value, int decimals);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace gpta::text
