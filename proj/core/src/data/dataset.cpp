#include "scs/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "scs/hash.hpp"

namespace scs::data {

std::span<const std::uint8_t> Dataset::image_bytes(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("image index " + std::to_string(i));
    return std::span<const std::uint8_t>(pixels).subspan(i * kImageBytes, kImageBytes);
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
    std::vector<double> v(indices.size() * kImageBytes);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        auto img = image_bytes(indices[b]);
        for (std::size_t k = 0; k < kImageBytes; ++k) v[b * kImageBytes + k] = img[k] / 255.0;
    }
    return Tensor::from_vector({indices.size(), kChannels, kImageSide, kImageSide}, std::move(v));
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(labels.at(i));
    return out;
}

std::array<std::size_t, kNumClasses> Dataset::class_counts() const {
    std::array<std::size_t, kNumClasses> counts{};
    for (std::uint8_t l : labels) ++counts[l];
    return counts;
}

Dataset parse_cifar_records(std::span<const std::uint8_t> bytes, const std::string& split,
                            const std::string& source) {
    if (bytes.size() % kRecordBytes != 0) {
        const std::size_t offset = bytes.size() - bytes.size() % kRecordBytes;
        throw FormatError(source + ": truncated record at byte offset " + std::to_string(offset) +
                          " (file size " + std::to_string(bytes.size()) + " is not a multiple of " +
                          std::to_string(kRecordBytes) + ")");
    }
    Dataset ds;
    ds.split = split;
    const std::size_t n = bytes.size() / kRecordBytes;
    ds.labels.reserve(n);
    ds.pixels.reserve(n * kImageBytes);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t offset = r * kRecordBytes;
        const std::uint8_t label = bytes[offset];
        if (label >= kNumClasses) {
            throw FormatError(source + ": label " + std::to_string(label) + " > 9 at byte offset " +
                              std::to_string(offset));
        }
        ds.labels.push_back(label);
        auto img = bytes.subspan(offset + 1, kImageBytes);
        ds.pixels.insert(ds.pixels.end(), img.begin(), img.end());
    }
    ds.subset.count = n;
    ds.checksum = fnv1a(bytes);
    return ds;
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing or unreadable dataset file: " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void append(Dataset& into, Dataset&& more) {
    into.pixels.insert(into.pixels.end(), more.pixels.begin(), more.pixels.end());
    into.labels.insert(into.labels.end(), more.labels.begin(), more.labels.end());
    into.checksum = mix_seed(into.checksum ^ more.checksum);
    into.subset.count = into.labels.size();
}

}  // namespace

Dataset read_cifar_file(const std::filesystem::path& path, const std::string& split) {
    auto bytes = read_bytes(path);
    return parse_cifar_records(bytes, split, path.string());
}

std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw FormatError("dataset directory not found: " + dir.string());
    }
    Dataset train = read_cifar_file(dir / "data_batch_1.bin", "train");
    for (int b = 2; b <= 5; ++b) {
        auto p = dir / ("data_batch_" + std::to_string(b) + ".bin");
        if (std::filesystem::exists(p)) append(train, read_cifar_file(p, "train"));
    }
    Dataset test = read_cifar_file(dir / "test_batch.bin", "test");
    return {std::move(train), std::move(test)};
}

std::vector<std::uint8_t> to_cifar_records(const Dataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(ds.size() * kRecordBytes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.push_back(ds.labels[i]);
        auto img = ds.image_bytes(i);
        out.insert(out.end(), img.begin(), img.end());
    }
    return out;
}

void write_cifar_file(const std::filesystem::path& path, const Dataset& ds) {
    auto bytes = to_cifar_records(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::size_t> subset_indices(const Dataset& ds, std::size_t n, bool stratified,
                                        std::uint64_t seed) {
    if (n > ds.size()) {
        throw std::invalid_argument("subset of " + std::to_string(n) + " from " +
                                    std::to_string(ds.size()) + " items");
    }
    std::vector<std::size_t> chosen;
    if (!stratified) {
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        std::mt19937_64 rng(derive_seed(seed, "subset"));
        std::shuffle(all.begin(), all.end(), rng);
        chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        std::array<std::vector<std::size_t>, kNumClasses> by_class;
        for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const std::size_t want = n / kNumClasses + (c < n % kNumClasses ? 1 : 0);
            auto& pool = by_class[c];
            if (want > pool.size()) {
                throw std::invalid_argument("class " + std::to_string(c) + " has only " +
                                            std::to_string(pool.size()) + " items, need " +
                                            std::to_string(want));
            }
            // Canonical content order first, so the pick does not depend on
            // where the items sit in `ds`. Identical images are interchangeable.
            std::vector<std::uint64_t> key(pool.size());
            for (std::size_t i = 0; i < pool.size(); ++i) key[i] = fnv1a(ds.image_bytes(pool[i]));
            std::vector<std::size_t> order(pool.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (key[a] != key[b]) return key[a] < key[b];
                auto ia = ds.image_bytes(pool[a]), ib = ds.image_bytes(pool[b]);
                return std::lexicographical_compare(ia.begin(), ia.end(), ib.begin(), ib.end());
            });
            std::vector<std::size_t> sorted(pool.size());
            for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = pool[order[i]];
            pool.swap(sorted);
            std::mt19937_64 rng(derive_seed(seed, "subset/class" + std::to_string(c)));
            std::shuffle(pool.begin(), pool.end(), rng);
            chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

Dataset select(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.split = ds.split;
    out.checksum = ds.checksum;
    out.labels.reserve(indices.size());
    out.pixels.reserve(indices.size() * kImageBytes);
    for (std::size_t i : indices) {
        out.labels.push_back(ds.labels.at(i));
        auto img = ds.image_bytes(i);
        out.pixels.insert(out.pixels.end(), img.begin(), img.end());
    }
    out.subset.count = indices.size();
    return out;
}

Dataset subset(const Dataset& ds, std::size_t n, bool stratified, std::uint64_t seed) {
    auto idx = subset_indices(ds, n, stratified, seed);
    Dataset out = select(ds, idx);
    out.subset = {n, stratified, seed, true};
    return out;
}

}  // namespace scs::data
