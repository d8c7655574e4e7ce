#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cmine::vecstore {

using Vector = std::vector<float>;

enum class Metric { euclidean, cosine };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

// Id-indexed dense float32 rows, stored row-major.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

    // Throws ArgumentError on a duplicate id, wrong length or non-finite value.
    void append(std::string id, std::string lang, std::span<const float> values);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t rows() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    const std::string& id(std::size_t i) const { return ids_[i]; }
    const std::string& lang(std::size_t i) const { return langs_[i]; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<std::string>& langs() const noexcept { return langs_; }
    const std::vector<float>& data() const noexcept { return data_; }

    // Row index for an id, or npos.
    std::size_t find(const std::string& id) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    // Subset of rows in the given order.
    EmbeddingMatrix select(std::span<const std::size_t> rows) const;

    bool operator==(const EmbeddingMatrix& other) const;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::string> langs_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

double squared_euclidean(std::span<const float> u, std::span<const float> v);

// Euclidean distance or cosine distance (1 - cosine similarity).
// Throws DomainError for a zero vector under cosine, ArgumentError on length mismatch.
double distance(std::span<const float> u, std::span<const float> v, Metric metric);

double cosine_similarity(std::span<const float> u, std::span<const float> v);

// Binary layout: "CMV1" | u32 LE dim | u64 LE rows | rows*dim f32 LE.
// The sidecar `<path>.idx.jsonl` holds {"id","lang","row"} per row.
void write_vectors(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_vectors(const std::filesystem::path& path);

std::filesystem::path index_path(const std::filesystem::path& vectors_path);

}  // namespace cmine::vecstore
