#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "evcrowd/error.hpp"

namespace evcrowd {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return bytes;
}

/// Group of output files that become visible together.
///
/// Each add() writes to a temporary sibling; commit() renames them all into
/// place. Files that already exist at the target paths are left untouched
/// unless commit() is reached. Uncommitted temporaries are removed on
/// destruction.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;

  ~StagedOutputs() {
    for (const auto& entry : entries_) {
      std::error_code ec;
      std::filesystem::remove(entry.temp, ec);
    }
  }

  void add(const std::filesystem::path& target, std::string_view bytes) {
    static std::atomic<unsigned> counter{0};
    auto temp = target;
    temp += ".tmp" + std::to_string(counter++);
    {
      std::ofstream out(temp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + target.string() + "' for writing");
      entries_.push_back({target, temp});
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      out.flush();
      if (!out) throw IoError("failed writing '" + target.string() + "'");
    }
  }

  void commit() {
    for (const auto& entry : entries_) {
      std::error_code ec;
      std::filesystem::rename(entry.temp, entry.target, ec);
      if (ec) {
        throw IoError("cannot move output into place at '" + entry.target.string() +
                      "': " + ec.message());
      }
    }
    entries_.clear();
  }

 private:
  struct Entry {
    std::filesystem::path target;
    std::filesystem::path temp;
  };
  std::vector<Entry> entries_;
};

/// Writes one file via temp-then-rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  StagedOutputs staged;
  staged.add(path, bytes);
  staged.commit();
}

}  // namespace evcrowd
