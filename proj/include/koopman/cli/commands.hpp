///
/// \file cli/commands.hpp
///
/// Pipeline commands. Each reads its inputs from and writes its outputs to
/// the configured output directory, and leaves a manifest_<command>.json
/// behind that echoes the resolved config.
///
#ifndef KOOPMAN_CLI_COMMANDS_HPP
#define KOOPMAN_CLI_COMMANDS_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <koopman/cli/config.hpp>
#include <koopman/data/duffing.hpp>
#include <koopman/data/ks.hpp>
#include <koopman/data/transform.hpp>
#include <koopman/evalx.hpp>
#include <koopman/io/models.hpp>
#include <koopman/lran/analysis.hpp>
#include <koopman/lran/checkpoint.hpp>

namespace koopman::cli
{

inline constexpr const char* library_version = "1.0.0";

/// Exit codes of the command-line tool.
enum ExitCode : int
{
    exit_ok        = 0,
    exit_failure   = 1,
    exit_config    = 2,
    exit_numerical = 3,
    exit_io        = 4,
};

class Workspace
{
public:
    explicit Workspace(Json cfg) : cfg_(std::move(cfg))
    {
        dir_ = cfg_.at("out").get<std::string>();
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw IoError(dir_.string() + ": cannot create output directory: " + ec.message());
    }

    const Json& config() const { return cfg_; }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    bool exists(const std::string& name) const { return std::filesystem::exists(dir_ / name); }

    std::uint64_t seed() const { return cfg_.at("seed").get<std::uint64_t>(); }

    void write_json(const std::string& name, const Json& j) const
    {
        std::ofstream os(path(name), std::ios::trunc);
        if (!os)
            throw IoError(path(name) + ": cannot open for writing");
        os << j.dump(2) << '\n';
        if (!os)
            throw IoError(path(name) + ": write failed");
    }

    /// Manifest with the config echo, its hash and hashes of the inputs read.
    void write_manifest(const std::string& command, const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs, const Json& extra = Json::object()) const
    {
        Json m;
        m["command"]       = command;
        m["version"]       = library_version;
        m["config"]        = cfg_;
        m["config_hash"]   = config_hash(cfg_);
        m["seed"]          = seed();
        Json in            = Json::object();
        for (const auto& name : inputs)
            in[name] = file_hash(path(name));
        m["inputs"]  = in;
        m["outputs"] = outputs;
        m["details"] = extra;
        write_json("manifest_" + command + ".json", m);
    }

    static std::string file_hash(const std::string& p)
    {
        std::ifstream is(p, std::ios::binary);
        if (!is)
            throw IoError(p + ": missing input");
        std::uint64_t h = 1469598103934665603ULL;
        char buf[1 << 16];
        while (is.read(buf, sizeof buf) || is.gcount() > 0)
        {
            for (std::streamsize i = 0; i < is.gcount(); ++i)
            {
                h ^= static_cast<unsigned char>(buf[i]);
                h *= 1099511628211ULL;
            }
        }
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h;
        return os.str();
    }

private:
    Json cfg_;
    std::filesystem::path dir_;
};

namespace detail
{

inline void need(const Workspace& w, const std::string& name, const std::string& producer)
{
    if (!w.exists(name))
        throw IoError(w.path(name) + ": missing; run '" + producer + "' first");
}

inline KernelSpec kernel_from_section(const Json& cfg, const std::string& section)
{
    const std::string kind = get<std::string>(cfg, section, "kernel");
    if (kind == "gaussian_rbf")
        return KernelSpec::gaussian_rbf(get<double>(cfg, section, "sigma"));
    if (kind == "linear")
        return KernelSpec::linear();
    if (kind == "polynomial")
        return KernelSpec::polynomial(get<int>(cfg, section, "degree"), get<double>(cfg, section, "offset"));
    throw ConfigError("config: '" + section + ".kernel' must be gaussian_rbf, linear or polynomial");
}

inline lran::LossConfig loss_config(const Json& cfg)
{
    lran::LossConfig c;
    c.T            = get<Index>(cfg, "lran", "T");
    c.delta        = get<double>(cfg, "lran", "delta");
    c.beta         = get<double>(cfg, "lran", "beta");
    c.eps1         = get<double>(cfg, "lran", "eps1");
    c.eps2         = get<double>(cfg, "lran", "eps2");
    c.omega_weight = get<double>(cfg, "lran", "omega_weight");
    return c;
}

inline lran::AdamConfig adam_config(const Json& cfg, std::uint64_t seed)
{
    lran::AdamConfig c;
    c.lr0          = get<double>(cfg, "lran", "lr0");
    c.beta1        = get<double>(cfg, "lran", "beta1");
    c.beta2        = get<double>(cfg, "lran", "beta2");
    c.eps_adam     = get<double>(cfg, "lran", "eps_adam");
    c.decay_factor = get<double>(cfg, "lran", "decay_factor");
    c.decay_steps  = get<Index>(cfg, "lran", "decay_steps");
    c.total_steps  = get<Index>(cfg, "lran", "total_steps");
    c.batch_size   = get<Index>(cfg, "lran", "batch_size");
    c.seed         = seed;
    return c;
}

inline std::vector<lran::FixedEigenvalue> constraint_from_config(const Json& cfg, double dt)
{
    std::vector<lran::FixedEigenvalue> out;
    try
    {
        for (const auto& e : cfg.at("lran").at("constraint"))
            out.push_back(lran::FixedEigenvalue::from_continuous({e.at("re").get<double>(), e.at("im").get<double>()}, dt));
    }
    catch (const Json::exception& e)
    {
        throw ConfigError(std::string("config: 'lran.constraint' entries need numeric 're' and 'im': ") + e.what());
    }
    return out;
}

inline data::DuffingParams duffing_params(const Json& cfg)
{
    const Json& d = cfg.at("dataset").at("duffing");
    return {d.at("delta").get<double>(), d.at("beta").get<double>(), d.at("alpha").get<double>()};
}

/// Column-wise copy of every `stride`-th snapshot, at most `max_points` of them.
inline RealMatrix sample_points(const data::SnapshotSet& s, Index max_points)
{
    const RealMatrix all = s.concatenated();
    const Index count    = std::min(max_points, all.cols());
    RealMatrix out(all.rows(), count);
    for (Index j = 0; j < count; ++j)
        out.col(j) = all.col(j * all.cols() / count);
    return out;
}

} // namespace detail

/// Simulates or loads the dataset and writes train/eval/test KPD1 files.
inline Json cmd_generate(const Workspace& w)
{
    const Json& cfg          = w.config();
    const std::string source = get<std::string>(cfg, "dataset", "source");
    const Index n_traj       = get<Index>(cfg, "dataset", "n_traj");
    const Index n_test       = get<Index>(cfg, "dataset", "test_n_traj");
    const Index samples      = get<Index>(cfg, "dataset", "samples");
    const double dt          = get<double>(cfg, "dataset", "dt");
    if (n_test < 0)
        throw ConfigError("config: 'dataset.test_n_traj' must be non-negative");

    data::SnapshotSet all;
    std::vector<std::string> inputs;
    if (source == "duffing")
        all = data::simulate_duffing(n_traj + n_test, samples, dt, detail::duffing_params(cfg), w.seed());
    else if (source == "ks")
    {
        const Json& k = cfg.at("dataset").at("ks");
        data::KsParams p;
        p.L       = k.at("L").get<double>();
        p.n_modes = k.at("n_modes").get<Index>();
        all = data::simulate_ks(n_traj + n_test, samples, dt, p, k.at("ic_amplitude").get<double>(), w.seed(),
                                k.at("burn_in").get<double>());
    }
    else if (source == "file")
    {
        const std::string file = get<std::string>(cfg, "dataset", "file");
        all                    = data::read_kpd1(file);
        all.meta["file"]       = file;
        all.meta["file_hash"]  = Workspace::file_hash(file);
        if (n_test != 0)
            throw ConfigError("config: 'dataset.test_n_traj' is not supported for file input");
    }
    else
        throw ConfigError("config: 'dataset.source' must be duffing, ks or file");

    Json details = Json::object();
    if (const Index k = get<Index>(cfg, "dataset", "pod_modes"); k > 0)
    {
        auto [basis, projected] = data::pod_project(all, k, get<bool>(cfg, "dataset", "pod_subtract_mean"));
        details["pod_energy_fraction"] = basis.captured_fraction();
        io::Bundle b;
        b.add("modes", basis.modes);
        b.add("energies", basis.energies);
        b.add("mean", basis.mean);
        io::write_bundle(w.path("pod.bin"), io::Magic{'K', 'P', 'O', 'D', '1', '\0', '\0', '\0'}, std::move(b));
        all = std::move(projected);
    }
    all = data::delay_embed(all, get<Index>(cfg, "dataset", "delays"), get<Index>(cfg, "dataset", "delay_lag"));

    data::SnapshotSet extra_test;
    if (n_test > 0)
    {
        extra_test = all;
        extra_test.trajectories.assign(all.trajectories.begin() + n_traj, all.trajectories.end());
        all.trajectories.resize(static_cast<std::size_t>(n_traj));
    }

    const std::string scheme = get<std::string>(cfg, "split", "scheme");
    data::Splits splits;
    if (scheme == "by_trajectory")
    {
        const auto r = cfg.at("split").at("ratios").get<std::vector<double>>();
        if (r.size() != 3)
            throw ConfigError("config: 'split.ratios' must have three entries");
        splits = data::split_by_trajectory(all, {r[0], r[1], r[2]}, w.seed() ^ 0x5bd1e995ULL);
    }
    else if (scheme == "odd_even_interleave")
        splits = data::split_odd_even_interleave(all);
    else
        throw ConfigError("config: 'split.scheme' must be by_trajectory or odd_even_interleave");
    for (auto& t : extra_test.trajectories)
        splits.test.trajectories.push_back(std::move(t));

    data::write_kpd1(w.path("train.kpd1"), splits.train);
    data::write_kpd1(w.path("eval.kpd1"), splits.eval);
    data::write_kpd1(w.path("test.kpd1"), splits.test);
    details["train_trajectories"] = splits.train.trajectories.size();
    details["eval_trajectories"]  = splits.eval.trajectories.size();
    details["test_trajectories"]  = splits.test.trajectories.size();
    details["state_dim"]          = splits.train.state_dim();
    w.write_manifest("generate", {}, {"train.kpd1", "eval.kpd1", "test.kpd1"}, details);
    return details;
}

inline Json cmd_fit_kdmd(const Workspace& w)
{
    detail::need(w, "train.kpd1", "generate");
    const Json& cfg               = w.config();
    const data::SnapshotSet train = data::read_kpd1(w.path("train.kpd1"));
    const auto [x, y]             = train.pairs(get<Index>(cfg, "kdmd", "max_pairs"));
    const KdmdModel m = fit_kdmd(x, y, detail::kernel_from_section(cfg, "kdmd"), get<Index>(cfg, "kdmd", "rank"));
    io::save_kdmd(w.path("kdmd.bin"), m, {{"dt", train.dt}});
    Json details = {{"pairs", x.cols()}, {"rank", m.rank}, {"warning", m.warning}};
    if (!m.warning.empty())
        std::cerr << "warning: " << m.warning << '\n';
    w.write_manifest("fit-kdmd", {"train.kpd1"}, {"kdmd.bin"}, details);
    return details;
}

inline Json cmd_balred(const Workspace& w)
{
    detail::need(w, "kdmd.bin", "fit-kdmd");
    const Json& cfg = w.config();
    auto model      = std::make_shared<const KdmdModel>(io::load_kdmd(w.path("kdmd.bin")));
    const FeatureStateSystem sys = build_feature_system(*model, model->X_train);
    const BpodFactors f =
        bpod_factors(sys, get<Index>(cfg, "bpod", "horizon"), get<Index>(cfg, "bpod", "output_rank"));
    if (!f.warning.empty())
        std::cerr << "warning: " << f.warning << '\n';
    const BalancedRom rom = balance_truncate(sys, f, get<Index>(cfg, "bpod", "order"), model);
    io::save_rom(w.path("rom.bin"), rom);
    data::write_csv(w.path("hankel.csv"), rom.hankel, {"hankel_singular_value"});
    Json details = {{"order", rom.order()}, {"projection_rank", f.projection_rank}, {"warning", f.warning}};
    w.write_manifest("balred", {"kdmd.bin"}, {"rom.bin", "hankel.csv"}, details);
    return details;
}

inline Json cmd_fit_mkrecon(const Workspace& w)
{
    detail::need(w, "rom.bin", "balred");
    const Json& cfg       = w.config();
    const BalancedRom rom = io::load_rom(w.path("rom.bin"));
    const RealMatrix& x   = rom.source->X_train;
    const RealMatrix z    = rom_encode(rom, x);
    const MultiKernelModel m =
        fit_mkrecon(z, x, detail::kernel_from_section(cfg, "mkrecon"), get<double>(cfg, "mkrecon", "gamma"),
                    get<Index>(cfg, "mkrecon", "r1"), get<Index>(cfg, "mkrecon", "r2"));
    io::save_mkrecon(w.path("mkrecon.bin"), m);
    Json details = {{"objective", mkrecon_objective(m, x)}};
    w.write_manifest("fit-mkrecon", {"rom.bin"}, {"mkrecon.bin"}, details);
    return details;
}

inline Json cmd_train_lran(const Workspace& w, bool verbose = true)
{
    detail::need(w, "train.kpd1", "generate");
    const Json& cfg               = w.config();
    const data::SnapshotSet train = data::read_kpd1(w.path("train.kpd1"));
    data::SnapshotSet eval;
    if (w.exists("eval.kpd1"))
        eval = data::read_kpd1(w.path("eval.kpd1"));

    const auto we = cfg.at("lran").at("widths_enc").get<std::vector<Index>>();
    const auto wd = cfg.at("lran").at("widths_dec").get<std::vector<Index>>();
    if (we.empty() || wd.empty())
        throw ConfigError("config: 'lran.widths_enc' and 'lran.widths_dec' must be non-empty");
    if (we.front() != train.state_dim())
        throw ConfigError("config: encoder input width " + std::to_string(we.front())
                          + " differs from the state dimension " + std::to_string(train.state_dim()));

    lran::LranModel m = lran::init_model(we, wd, we.back(), w.seed(), detail::constraint_from_config(cfg, train.dt));
    lran::TrainOptions opts;
    opts.eval_every       = get<Index>(cfg, "lran", "eval_every");
    opts.max_eval_windows = get<Index>(cfg, "lran", "max_eval_windows");
    if (verbose)
        opts.on_record = [](const lran::TrainRecord& r) {
            std::cerr << "step " << r.step << " train " << r.train_loss << " eval " << r.eval_loss << " lr " << r.lr
                      << '\n';
        };
    std::vector<RealMatrix> eval_trajs;
    for (const auto& t : eval.trajectories)
        if (t.cols() >= get<Index>(cfg, "lran", "T"))
            eval_trajs.push_back(t);
    const lran::TrainResult r = lran::train(std::move(m), train.trajectories, eval_trajs, detail::loss_config(cfg),
                                            detail::adam_config(cfg, w.seed()), opts);

    lran::Checkpoint c{r.model, cfg.at("lran"), w.seed(), r.steps};
    c.config["dt"] = train.dt;
    lran::save_checkpoint(w.path("lran.bin"), c);

    RealMatrix hist(static_cast<Index>(r.history.size()), 4);
    for (std::size_t i = 0; i < r.history.size(); ++i)
        hist.row(static_cast<Index>(i)) << static_cast<double>(r.history[i].step), r.history[i].train_loss,
            r.history[i].eval_loss, r.history[i].lr;
    data::write_csv(w.path("lran_history.csv"), hist, {"step", "train_loss", "eval_loss", "lr"});
    Json details = {{"steps", r.steps}, {"final_eval_loss", r.history.empty() ? 0.0 : r.history.back().eval_loss}};
    w.write_manifest("train-lran", {"train.kpd1"}, {"lran.bin", "lran_history.csv"}, details);
    return details;
}

/// Batch predictor and spectrum of a fitted model.
struct LoadedModel
{
    std::string tag;
    evalx::BatchPredictor predict;
    KoopmanSpectrum spectrum;
};

inline std::vector<std::string> available_models(const Workspace& w)
{
    std::vector<std::string> out;
    if (w.exists("rom.bin"))
        out.push_back("rom");
    if (w.exists("lran.bin"))
        out.push_back("lran");
    return out;
}

inline LoadedModel load_model(const Workspace& w, const std::string& tag)
{
    const Json& cfg = w.config();
    LoadedModel out;
    out.tag = tag;
    if (tag == "rom")
    {
        detail::need(w, "rom.bin", "balred");
        auto rom = std::make_shared<const BalancedRom>(io::load_rom(w.path("rom.bin")));
        Reconstructor recon = linear_reconstructor(*rom);
        if (get<bool>(cfg, "mkrecon", "enabled") && w.exists("mkrecon.bin"))
        {
            auto mk = std::make_shared<const MultiKernelModel>(io::load_mkrecon(w.path("mkrecon.bin")));
            recon   = [mk](const RealMatrix& z) { return mk_reconstruct(*mk, z); };
        }
        out.predict = [rom, recon](const RealMatrix& x0, Index steps) { return rom_rollout(*rom, x0, steps, recon); };
        const data::SnapshotSet train = data::read_kpd1(w.path("train.kpd1"));
        out.spectrum = rom_spectrum(*rom, rom->source->X_train, train.dt);
    }
    else if (tag == "lran")
    {
        detail::need(w, "lran.bin", "train-lran");
        const lran::Checkpoint c = lran::load_checkpoint(w.path("lran.bin"));
        auto m                   = std::make_shared<const lran::LranModel>(c.model);
        out.predict = [m](const RealMatrix& x0, Index steps) { return lran::lran_rollout(*m, x0, steps); };
        const data::SnapshotSet train = data::read_kpd1(w.path("train.kpd1"));
        out.spectrum = lran::lran_spectrum(*m, detail::sample_points(train, 2000), train.dt);
    }
    else
        throw ConfigError("unknown model '" + tag + "' (expected rom or lran)");
    return out;
}

/// Rolls each test trajectory forward from its first state.
inline Json cmd_predict(const Workspace& w, const std::string& tag)
{
    detail::need(w, "test.kpd1", "generate");
    const data::SnapshotSet test = data::read_kpd1(w.path("test.kpd1"));
    const LoadedModel m          = load_model(w, tag);
    data::SnapshotSet out;
    out.dt   = test.dt;
    out.meta = {{"model", tag}, {"source", "prediction"}};
    for (const auto& t : test.trajectories)
    {
        const std::vector<RealMatrix> p = m.predict(t.col(0), t.cols() - 1);
        RealMatrix traj(t.rows(), t.cols());
        for (Index k = 0; k < t.cols(); ++k)
            traj.col(k) = p[static_cast<std::size_t>(k)].col(0);
        out.trajectories.push_back(std::move(traj));
    }
    const std::string name = "predictions_" + tag + ".kpd1";
    data::write_kpd1(w.path(name), out);
    Json details = {{"trajectories", out.trajectories.size()}};
    w.write_manifest("predict-" + tag, {"test.kpd1"}, {name}, details);
    return details;
}

///
/// Error-versus-horizon curve and, for Duffing data, basin classification
/// with the eigenfunction whose eigenvalue is closest to 1.
///
inline Json cmd_evaluate(const Workspace& w, const std::string& tag)
{
    detail::need(w, "test.kpd1", "generate");
    const Json& cfg              = w.config();
    const data::SnapshotSet test = data::read_kpd1(w.path("test.kpd1"));
    const LoadedModel m          = load_model(w, tag);

    const evalx::ErrorCurve curve = evalx::error_vs_horizon(m.predict, test, get<Index>(cfg, "eval", "max_horizon"), tag,
                                                            get<Index>(cfg, "eval", "stride"));
    evalx::write_curve_csv(w.path("error_" + tag + ".csv"), curve);
    Json metrics          = Json::object();
    metrics["model"]      = tag;
    metrics["error_curve"] = evalx::curve_to_json(curve);

    if (get<bool>(cfg, "eval", "basin"))
    {
        if (get<std::string>(cfg, "dataset", "source") != "duffing")
            throw ConfigError("config: 'eval.basin' needs Duffing data");
        const RealMatrix pts = detail::sample_points(test, get<Index>(cfg, "eval", "basin_points"));
        const data::DuffingParams p = detail::duffing_params(cfg);
        std::vector<int> labels;
        for (Index j = 0; j < pts.cols(); ++j)
            labels.push_back(data::duffing_basin_label({pts(0, j), pts(1, j)}, p));
        const Index k         = evalx::stationary_eigenvalue_index(m.spectrum.values);
        const ComplexMatrix phi = m.spectrum.eigenfunctions(pts);
        const evalx::BasinResult b = evalx::basin_classify(phi.row(k).transpose(), labels);
        metrics["basin"] = {{"accuracy", b.accuracy},
                            {"threshold", b.threshold},
                            {"rotation", b.rotation},
                            {"eigenvalue_index", k},
                            {"mu", {m.spectrum.values(k).real(), m.spectrum.values(k).imag()}},
                            {"points", pts.cols()},
                            {"scalarization", "real part after variance-maximizing rotation"},
                            {"warning", b.warning}};
    }
    w.write_json("metrics_" + tag + ".json", metrics);
    w.write_manifest("evaluate-" + tag, {"test.kpd1"}, {"metrics_" + tag + ".json", "error_" + tag + ".csv"});
    return metrics;
}

inline Json cmd_spectrum(const Workspace& w)
{
    std::vector<LoadedModel> models;
    for (const auto& tag : available_models(w))
        models.push_back(load_model(w, tag));
    if (models.empty())
        throw IoError(w.path("") + ": no fitted model found; run 'balred' or 'train-lran' first");
    std::vector<std::pair<std::string, const KoopmanSpectrum*>> list;
    for (const auto& m : models)
        list.emplace_back(m.tag, &m.spectrum);
    const evalx::SpectrumTable t = evalx::spectrum_table(list);
    evalx::write_spectrum_csv(w.path("spectrum.csv"), t);
    Json details = Json::object();
    for (const auto& m : models)
    {
        Json vals = Json::array();
        for (Index k = 0; k < m.spectrum.values.size(); ++k)
            vals.push_back({m.spectrum.values(k).real(), m.spectrum.values(k).imag()});
        details[m.tag] = vals;
    }
    w.write_manifest("spectrum", {}, {"spectrum.csv"}, details);
    return details;
}

} // namespace koopman::cli

#endif
