#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hsic/cube.hpp"
#include "hsic/rng.hpp"

namespace hsic::test {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        dir_ = std::filesystem::temp_directory_path() /
               ("hsic_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline HsiCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands,
                           std::uint64_t seed) {
    HsiCube cube;
    cube.rows = rows;
    cube.cols = cols;
    cube.bands = bands;
    cube.name = "random";
    cube.values.resize(rows * cols * bands);
    Rng rng(seed);
    for (auto& v : cube.values) v = static_cast<float>(rng.next_gaussian());
    return cube;
}

}  // namespace hsic::test
