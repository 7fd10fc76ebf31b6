// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cgnmt::subword {

/// Splits on ASCII whitespace; empty fields are dropped.
std::vector<std::string> split_ws(std::string_view line);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

/// Splits a UTF-8 string into code point substrings. A malformed byte is
/// returned as a one-byte piece.
std::vector<std::string> utf8_chars(std::string_view s);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace cgnmt::subword
