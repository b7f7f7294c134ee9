///
/// \file io/bundle.hpp
///
/// Binary container for fitted models: an 8-byte magic, a u32 format
/// version, a u32 header length, a UTF-8 JSON header and then raw
/// little-endian f64 matrices (column-major) in the order listed under the
/// header's "blocks" key.
///
#ifndef KOOPMAN_IO_BUNDLE_HPP
#define KOOPMAN_IO_BUNDLE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <koopman/error.hpp>
#include <koopman/numkit.hpp>

namespace koopman::io
{

using Json = nlohmann::json;

namespace detail
{

template <class T>
inline T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        std::array<unsigned char, sizeof(T)> b;
        std::memcpy(b.data(), &v, sizeof(T));
        std::reverse(b.begin(), b.end());
        std::memcpy(&v, b.data(), sizeof(T));
    }
    return v;
}

template <class T>
inline void write_scalar(std::ostream& os, T v)
{
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
inline T read_scalar(std::istream& is, const std::string& path)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw IoError(path + ": truncated file");
    return to_little(v);
}

inline void write_doubles(std::ostream& os, const double* data, Index count)
{
    if constexpr (std::endian::native == std::endian::little)
        os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
    else
        for (Index i = 0; i < count; ++i)
            write_scalar(os, data[i]);
}

inline void read_doubles(std::istream& is, double* data, Index count, const std::string& path)
{
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8));
    if (!is)
        throw IoError(path + ": truncated data block");
    if constexpr (std::endian::native == std::endian::big)
        for (Index i = 0; i < count; ++i)
            data[i] = to_little(data[i]);
}

} // namespace detail

using Magic = std::array<char, 8>;

struct NamedMatrix
{
    std::string name;
    RealMatrix value;
};

struct Bundle
{
    Json header = Json::object();
    std::vector<NamedMatrix> blocks;

    void add(std::string name, RealMatrix m) { blocks.push_back({std::move(name), std::move(m)}); }

    const RealMatrix& get(const std::string& name) const
    {
        for (const auto& b : blocks)
            if (b.name == name)
                return b.value;
        throw IoError("bundle: missing block '" + name + "'");
    }

    bool has(const std::string& name) const
    {
        for (const auto& b : blocks)
            if (b.name == name)
                return true;
        return false;
    }
};

inline constexpr std::uint32_t bundle_version = 1;

inline void write_bundle(const std::string& path, const Magic& magic, Bundle bundle)
{
    Json list = Json::array();
    for (const auto& b : bundle.blocks)
        list.push_back({{"name", b.name}, {"rows", b.value.rows()}, {"cols", b.value.cols()}});
    bundle.header["blocks"] = list;
    const std::string text  = bundle.header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw IoError(path + ": cannot open for writing");
    os.write(magic.data(), 8);
    detail::write_scalar<std::uint32_t>(os, bundle_version);
    detail::write_scalar<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : bundle.blocks)
        detail::write_doubles(os, b.value.data(), b.value.size());
    if (!os)
        throw IoError(path + ": write failed");
}

inline Bundle read_bundle(const std::string& path, const Magic& magic)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError(path + ": cannot open for reading");
    Magic got{};
    is.read(got.data(), 8);
    if (!is || got != magic)
        throw IoError(path + ": unrecognized file format");
    const auto version = detail::read_scalar<std::uint32_t>(is, path);
    if (version != bundle_version)
        throw IoError(path + ": unsupported format version " + std::to_string(version));
    const auto length = detail::read_scalar<std::uint32_t>(is, path);
    std::string text(length, '\0');
    is.read(text.data(), length);
    if (!is)
        throw IoError(path + ": truncated header");

    Bundle out;
    try
    {
        out.header = Json::parse(text);
        for (const auto& b : out.header.at("blocks"))
        {
            const Index rows = b.at("rows").get<Index>();
            const Index cols = b.at("cols").get<Index>();
            if (rows < 0 || cols < 0)
                throw IoError(path + ": negative block shape");
            RealMatrix m(rows, cols);
            detail::read_doubles(is, m.data(), m.size(), path);
            out.blocks.push_back({b.at("name").get<std::string>(), std::move(m)});
        }
    }
    catch (const Json::exception& e)
    {
        throw IoError(path + ": malformed header: " + e.what());
    }
    return out;
}

inline Json vector_to_json(const RealVector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline RealVector json_to_vector(const Json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size()));
}

} // namespace koopman::io

#endif
