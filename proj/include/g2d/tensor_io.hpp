#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace g2d {

/// One record of a tensor container file: an id, a shape, and row-major data.
struct TensorRecord {
    std::int64_t id = 0;
    std::vector<std::uint64_t> shape;
    std::variant<std::vector<double>, std::vector<float>, std::vector<std::int32_t>> data;

    std::size_t element_count() const;
    /// Converts whatever element type is stored to double.
    std::vector<double> as_double() const;
};

/// Binary container layout (little-endian):
///   magic "G2DT", u32 version, u64 record count, then per record:
///   i64 id, u32 rank, u64 dims[rank], u8 dtype (0 f64, 1 f32, 2 i32), payload.
/// A JSON manifest is written next to it as <path>.json.
void write_tensor_file(const std::filesystem::path& path, const std::vector<TensorRecord>& records,
                       const nlohmann::json& manifest = nlohmann::json::object());

std::vector<TensorRecord> read_tensor_file(const std::filesystem::path& path);

/// Reads <path>.json, or returns an empty object if it is absent.
nlohmann::json read_manifest(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& path);

}  // namespace g2d
