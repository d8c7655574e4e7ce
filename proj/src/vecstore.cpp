#include "cmine/vecstore.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "cmine/error.hpp"
#include "json.hpp"

namespace cmine::vecstore {

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "cosine") return Metric::cosine;
    throw ArgumentError("unknown metric: " + name);
}

std::string to_string(Metric metric) {
    return metric == Metric::euclidean ? "euclidean" : "cosine";
}

void EmbeddingMatrix::append(std::string id, std::string lang, std::span<const float> values) {
    if (values.size() != dim_)
        throw ArgumentError("vector for " + id + " has length " + std::to_string(values.size()) +
                            ", expected " + std::to_string(dim_));
    for (float v : values)
        if (!std::isfinite(v)) throw ArgumentError("non-finite value in vector " + id);
    if (!index_.emplace(id, ids_.size()).second) throw ArgumentError("duplicate vector id: " + id);
    ids_.push_back(std::move(id));
    langs_.push_back(std::move(lang));
    data_.insert(data_.end(), values.begin(), values.end());
}

std::size_t EmbeddingMatrix::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? npos : it->second;
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::size_t> rows) const {
    EmbeddingMatrix out(dim_);
    out.ids_.reserve(rows.size());
    out.data_.reserve(rows.size() * dim_);
    for (std::size_t r : rows) out.append(ids_[r], langs_[r], row(r));
    return out;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
    if (dim_ != other.dim_ || ids_ != other.ids_ || langs_ != other.langs_) return false;
    return data_.size() == other.data_.size() &&
           std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

double squared_euclidean(std::span<const float> u, std::span<const float> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = static_cast<double>(u[i]) - static_cast<double>(v[i]);
        s += d * d;
    }
    return s;
}

double cosine_similarity(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) throw ArgumentError("vector length mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<double>(u[i]) * v[i];
        nu += static_cast<double>(u[i]) * u[i];
        nv += static_cast<double>(v[i]) * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw DomainError("cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double distance(std::span<const float> u, std::span<const float> v, Metric metric) {
    if (u.size() != v.size()) throw ArgumentError("vector length mismatch");
    if (metric == Metric::euclidean) return std::sqrt(squared_euclidean(u, v));
    return 1.0 - cosine_similarity(u, v);
}

std::filesystem::path index_path(const std::filesystem::path& vectors_path) {
    return std::filesystem::path(vectors_path.string() + ".idx.jsonl");
}

namespace {

constexpr std::array<char, 4> k_magic{'C', 'M', 'V', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw FormatError("truncated vector file header");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace

void write_vectors(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write vectors: " + path.string());
    out.write(k_magic.data(), k_magic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    for (float f : m.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    if (!out) throw IoError("write failed: " + path.string());

    std::ofstream idx(index_path(path), std::ios::binary | std::ios::trunc);
    if (!idx) throw IoError("cannot write index: " + index_path(path).string());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        nlohmann::ordered_json j;
        j["id"] = m.id(r);
        j["lang"] = m.lang(r);
        j["row"] = r;
        idx << j.dump() << '\n';
    }
    if (!idx) throw IoError("write failed: " + index_path(path).string());
}

EmbeddingMatrix read_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vectors: " + path.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != k_magic)
        throw FormatError("bad magic in " + path.string());
    const auto dim = get_le<std::uint32_t>(in);
    const auto rows = get_le<std::uint64_t>(in);

    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(rows) * dim);
    std::vector<unsigned char> buf(static_cast<std::size_t>(dim) * 4);
    for (std::uint64_t r = 0; r < rows; ++r) {
        if (dim > 0 && !in.read(reinterpret_cast<char*>(buf.data()), buf.size()))
            throw FormatError("truncated vector data in " + path.string());
        for (std::size_t c = 0; c < dim; ++c) {
            std::uint32_t bits = 0;
            for (std::size_t b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(buf[c * 4 + b]) << (8 * b);
            data.push_back(std::bit_cast<float>(bits));
        }
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes in " + path.string());

    std::ifstream idx(index_path(path), std::ios::binary);
    if (!idx) throw IoError("cannot open index: " + index_path(path).string());
    std::vector<std::pair<std::string, std::string>> meta(static_cast<std::size_t>(rows));
    std::vector<bool> filled(meta.size(), false);
    std::string line;
    std::size_t seen = 0;
    while (std::getline(idx, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("row") ||
            !j["id"].is_string() || !j["row"].is_number_unsigned())
            throw FormatError("bad index line in " + index_path(path).string());
        const auto row = j["row"].get<std::size_t>();
        if (row >= meta.size() || filled[row])
            throw FormatError("index row out of range or repeated: " + std::to_string(row));
        filled[row] = true;
        meta[row] = {j["id"].get<std::string>(), j.value("lang", std::string{})};
        ++seen;
    }
    if (seen != meta.size())
        throw FormatError("index has " + std::to_string(seen) + " rows, vectors " +
                          std::to_string(meta.size()));

    EmbeddingMatrix m(dim);
    for (std::size_t r = 0; r < meta.size(); ++r) {
        try {
            m.append(meta[r].first, meta[r].second,
                     std::span<const float>(data.data() + r * dim, dim));
        } catch (const ArgumentError& e) {
            throw FormatError(e.what());
        }
    }
    return m;
}

}  // namespace cmine::vecstore
