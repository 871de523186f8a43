#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scs/tensor.hpp"

namespace scs::data {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kImageBytes = kChannels * kImageSide * kImageSide;  // 3072
inline constexpr std::size_t kRecordBytes = 1 + kImageBytes;
inline constexpr std::size_t kNumClasses = 10;

struct SubsetInfo {
    std::size_t count = 0;
    bool stratified = false;
    std::uint64_t seed = 0;
    bool is_subset = false;
};

/// CIFAR-style image set. Pixels are kept as the raw bytes of the binary
/// format (channel-major, row-major within a channel); `batch` scales them by
/// 1/255 into [0,1].
struct Dataset {
    std::vector<std::uint8_t> pixels;  // size() * 3072
    std::vector<std::uint8_t> labels;
    std::string split;
    SubsetInfo subset;
    std::uint64_t checksum = 0;  // FNV-1a of the source record bytes

    std::size_t size() const { return labels.size(); }
    std::span<const std::uint8_t> image_bytes(std::size_t i) const;

    /// (B, 3, 32, 32) tensor of the selected images in [0, 1].
    Tensor batch(std::span<const std::size_t> indices) const;
    std::vector<int> batch_labels(std::span<const std::size_t> indices) const;

    std::array<std::size_t, kNumClasses> class_counts() const;
};

/// Parses CIFAR-10 binary records (1 label byte + 3072 pixel bytes each).
/// Throws FormatError naming the byte offset of the first bad record.
Dataset parse_cifar_records(std::span<const std::uint8_t> bytes, const std::string& split,
                            const std::string& source = "<memory>");

Dataset read_cifar_file(const std::filesystem::path& path, const std::string& split);

/// Loads data_batch_1..5.bin (at least the first must exist) and
/// test_batch.bin from `dir`.
std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir);

std::vector<std::uint8_t> to_cifar_records(const Dataset& ds);
void write_cifar_file(const std::filesystem::path& path, const Dataset& ds);

/// Indices chosen by `subset`, sorted ascending.
std::vector<std::size_t> subset_indices(const Dataset& ds, std::size_t n, bool stratified,
                                        std::uint64_t seed);

/// n items, deterministic per seed. Stratified keeps every class count within
/// one of n/10.
Dataset subset(const Dataset& ds, std::size_t n, bool stratified, std::uint64_t seed);

Dataset select(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace scs::data
