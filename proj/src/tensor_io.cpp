#include "g2d/tensor_io.hpp"

#include "g2d/graph.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

namespace g2d {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "tensor container assumes a little-endian host");

namespace {

constexpr char magic[4] = {'G', '2', 'D', 'T'};
constexpr std::uint32_t version = 1;

template <class T>
void put(std::ostream& os, const T& value)
{
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is, const fs::path& path)
{
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw FormatError("truncated tensor file " + path.string());
    return value;
}

}  // namespace

std::size_t TensorRecord::element_count() const
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::uint64_t b) { return a * static_cast<std::size_t>(b); });
}

std::vector<double> TensorRecord::as_double() const
{
    return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, data);
}

fs::path manifest_path(const fs::path& path)
{
    return fs::path(path.string() + ".json");
}

void write_tensor_file(const fs::path& path, const std::vector<TensorRecord>& records, const nlohmann::json& manifest)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write " + path.string());
    os.write(magic, 4);
    put(os, version);
    put(os, static_cast<std::uint64_t>(records.size()));
    for (const auto& r : records) {
        const std::size_t n = std::visit([](const auto& v) { return v.size(); }, r.data);
        if (n != r.element_count()) throw FormatError("tensor record " + std::to_string(r.id) + ": data size != shape product");
        put(os, r.id);
        put(os, static_cast<std::uint32_t>(r.shape.size()));
        for (auto d : r.shape) put(os, d);
        put(os, static_cast<std::uint8_t>(r.data.index()));
        std::visit([&](const auto& v) { os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(v[0]))); },
                   r.data);
    }
    if (!os) throw FormatError("write failed for " + path.string());
    std::ofstream ms(manifest_path(path));
    ms << manifest.dump(2) << '\n';
}

std::vector<TensorRecord> read_tensor_file(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    char m[4];
    if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw FormatError(path.string() + " is not a tensor container");
    if (auto v = get<std::uint32_t>(is, path); v != version)
        throw FormatError("unsupported tensor container version " + std::to_string(v));
    const auto count = get<std::uint64_t>(is, path);
    std::vector<TensorRecord> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        TensorRecord r;
        r.id = get<std::int64_t>(is, path);
        const auto rank = get<std::uint32_t>(is, path);
        if (rank > 16) throw FormatError("implausible tensor rank in " + path.string());
        r.shape.resize(rank);
        for (auto& d : r.shape) d = get<std::uint64_t>(is, path);
        const auto dtype = get<std::uint8_t>(is, path);
        const std::size_t n = r.element_count();
        auto fill = [&](auto tag) {
            using T = decltype(tag);
            std::vector<T> v(n);
            if (!is.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T))))
                throw FormatError("truncated tensor file " + path.string());
            r.data = std::move(v);
        };
        switch (dtype) {
        case 0: fill(double{}); break;
        case 1: fill(float{}); break;
        case 2: fill(std::int32_t{}); break;
        default: throw FormatError("unknown dtype " + std::to_string(dtype) + " in " + path.string());
        }
        out.push_back(std::move(r));
    }
    return out;
}

nlohmann::json read_manifest(const fs::path& path)
{
    std::ifstream is(manifest_path(path));
    if (!is) return nlohmann::json::object();
    return nlohmann::json::parse(is);
}

}  // namespace g2d
