#include "isaac/util/fs.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "isaac/util/error.hpp"

namespace isaac::fs {
namespace {

std::mutex& hook_mutex() {
  static std::mutex m;
  return m;
}

WriteHook& hook() {
  static WriteHook h;
  return h;
}

void run_hook(const std::filesystem::path& path) {
  WriteHook h;
  {
    std::lock_guard lock(hook_mutex());
    h = hook();
  }
  if (h) h(path);
}

void write_and_sync(const std::filesystem::path& path, std::string_view content, int flags) {
  const int fd = ::open(path.c_str(), flags, 0644);
  if (fd < 0) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < content.size()) {
    const auto n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(ErrorCode::kIoError, "write failed for " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path write_staged(const std::filesystem::path& path, std::string_view content) {
  run_hook(path);
  auto tmp = path;
  tmp += ".tmp";
  write_and_sync(tmp, content, O_WRONLY | O_CREAT | O_TRUNC);
  return tmp;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  const auto tmp = write_staged(path, content);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "rename failed for " + path.string() + ": " + ec.message());
}

void commit_staged(const std::filesystem::path& path) {
  run_hook(path);
  auto tmp = path;
  tmp += ".tmp";
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "rename failed for " + path.string() + ": " + ec.message());
}

void append_line(const std::filesystem::path& path, std::string_view line) {
  run_hook(path);
  std::string buf(line);
  buf.push_back('\n');
  write_and_sync(path, buf, O_WRONLY | O_CREAT | O_APPEND);
}

void set_write_hook(WriteHook h) {
  std::lock_guard lock(hook_mutex());
  hook() = std::move(h);
}

}  // namespace isaac::fs
