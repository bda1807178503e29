#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace isaac::fs {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, flushes it to disk, then renames over the
// target. Readers see either the old or the new content, never a mix.
void atomic_write(const std::filesystem::path& path, std::string_view content);

// Writes content to path + ".tmp" and syncs it, without renaming.
std::filesystem::path write_staged(const std::filesystem::path& path, std::string_view content);

// Renames path + ".tmp" over path.
void commit_staged(const std::filesystem::path& path);

void append_line(const std::filesystem::path& path, std::string_view line);

// Test hook: invoked before every durable write with the target path. Fault
// injection tests throw from here to simulate a crash between writes.
using WriteHook = std::function<void(const std::filesystem::path&)>;
void set_write_hook(WriteHook hook);

}  // namespace isaac::fs
