#include "svgforge/io.hpp"
#include "svgforge/error.hpp"

#include <cstdint>
#include <fmt/format.h>
#include <fstream>
#include <random>
#include <sstream>

namespace svgforge {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad())
        throw Error(ErrorCode::IoError, fmt::format("read from '{}' failed", path.string()));
    return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f)
        throw Error(ErrorCode::IoError, fmt::format("write to '{}' failed", path.string()));
}

StagedDirectory::StagedDirectory(fs::path target) : target_(std::move(target))
{
    fs::path parent = fs::absolute(target_).parent_path();
    std::error_code ec;
    fs::create_directories(parent, ec);
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
        fs::path candidate = parent / fmt::format(".{}.stage-{:08x}", target_.filename().string(), rd());
        if (fs::create_directory(candidate, ec)) {
            stage_ = std::move(candidate);
            return;
        }
    }
    throw Error(ErrorCode::IoError, fmt::format("cannot create staging directory next to '{}'", target_.string()));
}

StagedDirectory::~StagedDirectory()
{
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(stage_, ec);
    }
}

void StagedDirectory::commit()
{
    std::error_code ec;
    if (!fs::exists(target_)) {
        fs::rename(stage_, target_, ec);
        if (ec)
            throw Error(ErrorCode::IoError, fmt::format("cannot move output into '{}': {}", target_.string(), ec.message()));
        committed_ = true;
        return;
    }
    if (!fs::is_directory(target_))
        throw Error(ErrorCode::IoError, fmt::format("'{}' exists and is not a directory", target_.string()));
    for (const auto& entry : fs::directory_iterator(stage_)) {
        const fs::path dest = target_ / entry.path().filename();
        if (fs::is_directory(dest) && entry.is_directory())
            fs::remove_all(dest, ec);
        fs::rename(entry.path(), dest, ec);
        if (ec)
            throw Error(ErrorCode::IoError, fmt::format("cannot move '{}': {}", dest.string(), ec.message()));
    }
    fs::remove_all(stage_, ec);
    committed_ = true;
}

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace svgforge
