#pragma once

#include <string>
#include <string_view>

namespace cqda {

std::string read_file(const std::string& path);

// Write-to-temp-then-rename in the target directory; readers never observe a
// partial file and reruns with identical bytes are idempotent.
void atomic_write(const std::string& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace cqda
