///
/// \file lran/checkpoint.hpp
///
/// LRAN checkpoint: JSON header (widths, d, constraint, config, seed, step)
/// followed by the parameter blocks in declared order.
///
#ifndef KOOPMAN_LRAN_CHECKPOINT_HPP
#define KOOPMAN_LRAN_CHECKPOINT_HPP

#include <koopman/io/bundle.hpp>
#include <koopman/lran/train.hpp>

namespace koopman::lran
{

inline constexpr io::Magic checkpoint_magic{'K', 'L', 'R', 'A', 'N', '1', '\0', '\0'};

struct Checkpoint
{
    LranModel model;
    io::Json config = io::Json::object();
    std::uint64_t seed = 0;
    Index step = 0;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& c)
{
    io::Bundle b;
    b.header["widths_enc"] = c.model.encoder.widths;
    b.header["widths_dec"] = c.model.decoder.widths;
    b.header["d"]          = c.model.latent_dim();
    io::Json cons          = io::Json::array();
    for (const auto& f : c.model.transition.fixed)
        cons.push_back({{"pair", f.pair}, {"sigma", f.sigma}, {"omega", f.omega}});
    b.header["constraint"] = cons;
    b.header["config"]     = c.config;
    b.header["seed"]       = c.seed;
    b.header["step"]       = c.step;

    LranModel copy = c.model;
    for (const ParamBlock& p : param_blocks(copy))
        b.add(p.name, Eigen::Map<const RealMatrix>(p.data, p.rows, p.cols));
    io::write_bundle(path, checkpoint_magic, std::move(b));
}

inline Checkpoint load_checkpoint(const std::string& path)
{
    const io::Bundle b = io::read_bundle(path, checkpoint_magic);
    Checkpoint c;
    try
    {
        const auto we = b.header.at("widths_enc").get<std::vector<Index>>();
        const auto wd = b.header.at("widths_dec").get<std::vector<Index>>();
        const Index d = b.header.at("d").get<Index>();
        std::vector<FixedEigenvalue> cons;
        for (const auto& f : b.header.at("constraint"))
            cons.push_back({f.at("pair").get<bool>(), f.at("sigma").get<double>(), f.at("omega").get<double>()});
        c.model  = init_model(we, wd, d, 0, cons);
        c.config = b.header.value("config", io::Json::object());
        c.seed   = b.header.at("seed").get<std::uint64_t>();
        c.step   = b.header.at("step").get<Index>();
    }
    catch (const io::Json::exception& e)
    {
        throw IoError(path + ": malformed checkpoint header: " + e.what());
    }
    catch (const InvalidArgument& e)
    {
        throw IoError(path + ": inconsistent checkpoint: " + e.what());
    }

    for (const ParamBlock& p : param_blocks(c.model))
    {
        const RealMatrix& v = b.get(p.name);
        if (v.rows() != p.rows || v.cols() != p.cols)
            throw IoError(path + ": block '" + p.name + "' has the wrong shape");
        std::copy(v.data(), v.data() + v.size(), p.data);
    }
    return c;
}

} // namespace koopman::lran

#endif
