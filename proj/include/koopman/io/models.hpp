///
/// \file io/models.hpp
///
/// Model files for KDMD, balanced ROMs and multi-kernel reconstructions.
///
#ifndef KOOPMAN_IO_MODELS_HPP
#define KOOPMAN_IO_MODELS_HPP

#include <memory>
#include <string>

#include <koopman/balred.hpp>
#include <koopman/io/bundle.hpp>
#include <koopman/mkrecon.hpp>

namespace koopman::io
{

inline constexpr Magic kdmd_magic{'K', 'K', 'D', 'M', 'D', '1', '\0', '\0'};
inline constexpr Magic rom_magic{'K', 'R', 'O', 'M', '1', '\0', '\0', '\0'};
inline constexpr Magic mkrecon_magic{'K', 'M', 'K', 'R', '1', '\0', '\0', '\0'};

inline Json kernel_to_json(const KernelSpec& k)
{
    switch (k.kind)
    {
    case KernelSpec::Kind::gaussian_rbf:
        return {{"kind", "gaussian_rbf"}, {"sigma", k.sigma}};
    case KernelSpec::Kind::polynomial:
        return {{"kind", "polynomial"}, {"degree", k.degree}, {"offset", k.offset}};
    case KernelSpec::Kind::linear:
        break;
    }
    return {{"kind", "linear"}};
}

inline KernelSpec kernel_from_json(const Json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian_rbf")
        return KernelSpec::gaussian_rbf(j.at("sigma").get<double>());
    if (kind == "polynomial")
        return KernelSpec::polynomial(j.at("degree").get<int>(), j.at("offset").get<double>());
    if (kind == "linear")
        return KernelSpec::linear();
    throw InvalidArgument("unknown kernel kind '" + kind + "'");
}

namespace detail
{

inline void add_kdmd(Bundle& b, const KdmdModel& m, const std::string& prefix)
{
    b.header[prefix + "kernel"] = kernel_to_json(m.kernel);
    b.header[prefix + "rank"]   = m.rank;
    b.add(prefix + "X_train", m.X_train);
    b.add(prefix + "V", m.V);
    b.add(prefix + "Sigma", m.Sigma);
    b.add(prefix + "K_hat", m.K_hat);
}

inline KdmdModel get_kdmd(const Bundle& b, const std::string& prefix)
{
    KdmdModel m;
    m.kernel   = kernel_from_json(b.header.at(prefix + "kernel"));
    m.rank     = b.header.at(prefix + "rank").get<Index>();
    m.X_train  = b.get(prefix + "X_train");
    m.V        = b.get(prefix + "V");
    m.Sigma    = b.get(prefix + "Sigma");
    m.K_hat    = b.get(prefix + "K_hat");
    m.spectrum = general_eig_binormalized(m.K_hat);
    return m;
}

template <class F>
auto guarded(const std::string& path, F&& f)
{
    try
    {
        return f();
    }
    catch (const Json::exception& e)
    {
        throw IoError(path + ": malformed model header: " + e.what());
    }
}

} // namespace detail

inline void save_kdmd(const std::string& path, const KdmdModel& m, const Json& meta = Json::object())
{
    Bundle b;
    b.header["meta"] = meta;
    detail::add_kdmd(b, m, "");
    write_bundle(path, kdmd_magic, std::move(b));
}

inline KdmdModel load_kdmd(const std::string& path)
{
    const Bundle b = read_bundle(path, kdmd_magic);
    return detail::guarded(path, [&] { return detail::get_kdmd(b, ""); });
}

/// The ROM file embeds its source KDMD model so it can encode new states.
inline void save_rom(const std::string& path, const BalancedRom& rom, const Json& meta = Json::object())
{
    koopman::detail::require(rom.source != nullptr, "save_rom: reduced model has no source KDMD model");
    Bundle b;
    b.header["meta"]    = meta;
    b.header["horizon"] = rom.horizon;
    detail::add_kdmd(b, *rom.source, "kdmd.");
    b.add("T_d", rom.T_d);
    b.add("S_d", rom.S_d);
    b.add("A_red", rom.A_red);
    b.add("B_red", rom.B_red);
    b.add("C_red", rom.C_red);
    b.add("hankel", rom.hankel);
    write_bundle(path, rom_magic, std::move(b));
}

inline BalancedRom load_rom(const std::string& path)
{
    const Bundle b = read_bundle(path, rom_magic);
    return detail::guarded(path, [&] {
        BalancedRom rom;
        rom.horizon = b.header.at("horizon").get<Index>();
        rom.source  = std::make_shared<const KdmdModel>(detail::get_kdmd(b, "kdmd."));
        rom.T_d     = b.get("T_d");
        rom.S_d     = b.get("S_d");
        rom.A_red   = b.get("A_red");
        rom.B_red   = b.get("B_red");
        rom.C_red   = b.get("C_red");
        rom.hankel  = b.get("hankel");
        return rom;
    });
}

inline void save_mkrecon(const std::string& path, const MultiKernelModel& m, const Json& meta = Json::object())
{
    Bundle b;
    b.header["meta"]   = meta;
    b.header["kernel"] = kernel_to_json(m.kernel);
    b.header["gamma"]  = m.gamma;
    b.header["r1"]     = m.r1;
    b.header["r2"]     = m.r2;
    b.add("Z_train", m.Z_train);
    b.add("C1_hat", m.C1_hat);
    b.add("C2_hat", m.C2_hat);
    b.add("V1", m.V1);
    b.add("Sigma1", m.Sigma1);
    b.add("V2", m.V2);
    b.add("Sigma2", m.Sigma2);
    b.add("linear_map", m.linear_map);
    b.add("kernel_weights", m.kernel_weights);
    write_bundle(path, mkrecon_magic, std::move(b));
}

inline MultiKernelModel load_mkrecon(const std::string& path)
{
    const Bundle b = read_bundle(path, mkrecon_magic);
    return detail::guarded(path, [&] {
        MultiKernelModel m;
        m.kernel         = kernel_from_json(b.header.at("kernel"));
        m.gamma          = b.header.at("gamma").get<double>();
        m.r1             = b.header.at("r1").get<Index>();
        m.r2             = b.header.at("r2").get<Index>();
        m.Z_train        = b.get("Z_train");
        m.C1_hat         = b.get("C1_hat");
        m.C2_hat         = b.get("C2_hat");
        m.V1             = b.get("V1");
        m.Sigma1         = b.get("Sigma1");
        m.V2             = b.get("V2");
        m.Sigma2         = b.get("Sigma2");
        m.linear_map     = b.get("linear_map");
        m.kernel_weights = b.get("kernel_weights");
        return m;
    });
}

} // namespace koopman::io

#endif
