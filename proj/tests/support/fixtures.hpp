#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coderag/corpus.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Temp directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        dir_ = fs::temp_directory_path() /
               ("coderag_" + tag + "_" + std::to_string(rng()));
        fs::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return dir_; }

    fs::path write(const std::string& rel, const std::string& content) const {
        fs::path p = dir_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        return p;
    }

private:
    fs::path dir_;
};

inline coderag::RepoSnapshot make_repo(
    std::vector<std::pair<std::string, std::string>> files, std::string label = "fixture") {
    std::vector<coderag::SourceFile> sf;
    for (auto& [path, text] : files) sf.push_back({std::move(path), std::move(text), 0});
    return coderag::RepoSnapshot::from_files(std::move(label), std::move(sf));
}

inline std::shared_ptr<const coderag::RepoSnapshot> make_repo_ptr(
    std::vector<std::pair<std::string, std::string>> files, std::string label = "fixture") {
    return std::make_shared<coderag::RepoSnapshot>(make_repo(std::move(files), std::move(label)));
}

}  // namespace testsupport
