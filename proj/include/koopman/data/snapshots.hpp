///
/// \file data/snapshots.hpp
///
/// Trajectory containers and their on-disk formats (KPD1 binary and CSV).
///
#ifndef KOOPMAN_DATA_SNAPSHOTS_HPP
#define KOOPMAN_DATA_SNAPSHOTS_HPP

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <koopman/io/bundle.hpp>

namespace koopman::data
{

using io::Json;

namespace detail
{
using koopman::detail::require;
} // namespace detail

struct SnapshotSet
{
    std::vector<RealMatrix> trajectories; // each n x L_i
    double dt = 1.0;
    Json meta = Json::object();

    Index state_dim() const { return trajectories.empty() ? 0 : trajectories.front().rows(); }
    Index total_snapshots() const
    {
        Index n = 0;
        for (const auto& t : trajectories)
            n += t.cols();
        return n;
    }

    void validate() const
    {
        detail::require(dt > 0.0, "SnapshotSet: dt must be positive");
        for (const auto& t : trajectories)
            detail::require(t.rows() == state_dim(), "SnapshotSet: trajectories must share the state dimension");
    }

    /// All snapshots side by side.
    RealMatrix concatenated() const
    {
        RealMatrix out(state_dim(), total_snapshots());
        Index c = 0;
        for (const auto& t : trajectories)
        {
            out.middleCols(c, t.cols()) = t;
            c += t.cols();
        }
        return out;
    }

    /// Snapshot pairs (x_t, x_{t+1}) within trajectories, optionally capped by
    /// an evenly strided subsample of at most `max_pairs`.
    std::pair<RealMatrix, RealMatrix> pairs(Index max_pairs = -1) const
    {
        Index total = 0;
        for (const auto& t : trajectories)
            total += std::max<Index>(t.cols() - 1, 0);
        detail::require(total > 0, "SnapshotSet: no snapshot pairs");
        const Index count = max_pairs > 0 ? std::min(max_pairs, total) : total;
        RealMatrix x(state_dim(), count);
        RealMatrix y(state_dim(), count);
        Index flat = 0;
        Index out  = 0;
        for (const auto& t : trajectories)
            for (Index j = 0; j + 1 < t.cols(); ++j, ++flat)
                if (out < count && flat == out * total / count)
                {
                    x.col(out) = t.col(j);
                    y.col(out) = t.col(j + 1);
                    ++out;
                }
        return {x, y};
    }
};

inline constexpr io::Magic kpd1_magic{'K', 'P', 'D', '1', '\0', '\0', '\0', '\0'};
inline constexpr std::uint32_t kpd1_version = 1;

///
/// KPD1: 8-byte magic, u32 version, u32 metadata length, UTF-8 JSON metadata
/// (dt, n, trajectory lengths, provenance) and then one little-endian f64
/// column-major block per trajectory.
///
inline void write_kpd1(const std::string& path, const SnapshotSet& s)
{
    s.validate();
    Json meta           = Json::object();
    meta["dt"]          = s.dt;
    meta["n"]           = s.state_dim();
    std::vector<Index> lengths;
    for (const auto& t : s.trajectories)
        lengths.push_back(t.cols());
    meta["lengths"]     = lengths;
    meta["provenance"]  = s.meta;
    const std::string text = meta.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw IoError(path + ": cannot open for writing");
    os.write(kpd1_magic.data(), 8);
    io::detail::write_scalar<std::uint32_t>(os, kpd1_version);
    io::detail::write_scalar<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : s.trajectories)
        io::detail::write_doubles(os, t.data(), t.size());
    if (!os)
        throw IoError(path + ": write failed");
}

inline SnapshotSet read_kpd1(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError(path + ": cannot open for reading");
    io::Magic got{};
    is.read(got.data(), 8);
    if (!is || got != kpd1_magic)
        throw IoError(path + ": not a KPD1 file");
    const auto version = io::detail::read_scalar<std::uint32_t>(is, path);
    if (version != kpd1_version)
        throw IoError(path + ": unsupported KPD1 version " + std::to_string(version));
    const auto length = io::detail::read_scalar<std::uint32_t>(is, path);
    std::string text(length, '\0');
    is.read(text.data(), length);
    if (!is)
        throw IoError(path + ": truncated metadata");

    SnapshotSet s;
    try
    {
        const Json meta = Json::parse(text);
        s.dt            = meta.at("dt").get<double>();
        s.meta          = meta.value("provenance", Json::object());
        const Index n   = meta.at("n").get<Index>();
        for (Index len : meta.at("lengths").get<std::vector<Index>>())
        {
            if (len < 0 || n < 0)
                throw IoError(path + ": negative trajectory shape");
            RealMatrix t(n, len);
            io::detail::read_doubles(is, t.data(), t.size(), path);
            s.trajectories.push_back(std::move(t));
        }
    }
    catch (const Json::exception& e)
    {
        throw IoError(path + ": malformed KPD1 metadata: " + e.what());
    }
    if (!(s.dt > 0.0))
        throw IoError(path + ": dt must be positive");
    return s;
}

/// Comma-separated rows, full double precision.
inline void write_csv(const std::string& path, const RealMatrix& m, const std::vector<std::string>& header = {})
{
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoError(path + ": cannot open for writing");
    os << std::setprecision(17);
    for (std::size_t j = 0; j < header.size(); ++j)
        os << (j ? "," : "") << header[j];
    if (!header.empty())
        os << '\n';
    for (Index i = 0; i < m.rows(); ++i)
    {
        for (Index j = 0; j < m.cols(); ++j)
            os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
    if (!os)
        throw IoError(path + ": write failed");
}

/// Reads a numeric CSV; a first line that does not parse as numbers is skipped.
inline RealMatrix read_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError(path + ": cannot open for reading");
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(is, line))
    {
        if (line.empty() || line == "\r")
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ','))
        {
            try
            {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            }
            catch (const std::exception&)
            {
                numeric = false;
                break;
            }
        }
        if (!numeric)
        {
            if (first)
            {
                first = false;
                continue;
            }
            throw IoError(path + ": non-numeric entry in row " + std::to_string(rows.size() + 1));
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    RealMatrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

} // namespace koopman::data

#endif
