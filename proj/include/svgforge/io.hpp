#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace svgforge {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Stages files in a sibling temporary directory; commit() moves them into the target
/// directory. Destroying an uncommitted stage removes it, so failed runs leave nothing behind.
class StagedDirectory {
public:
    explicit StagedDirectory(std::filesystem::path target);
    ~StagedDirectory();
    StagedDirectory(const StagedDirectory&) = delete;
    StagedDirectory& operator=(const StagedDirectory&) = delete;

    std::filesystem::path path(std::string_view name) const { return stage_ / name; }
    const std::filesystem::path& stage() const { return stage_; }
    const std::filesystem::path& target() const { return target_; }
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path stage_;
    bool committed_ = false;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

} // namespace svgforge
