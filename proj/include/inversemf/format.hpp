#pragma once

#include <string>
#include <vector>

namespace imf {

// Shortest decimal that parses back to the same double.
std::string fmt_double(double x);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

// Writes `text` to `path`, throwing Error(Io) on failure.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

std::string hex64(unsigned long long x);

}  // namespace imf
