///
/// \file cli/config.hpp
///
/// Experiment configuration: a JSON document whose schema is the default
/// template below. Presets and user files are deep-merged over the template;
/// keys the template does not know are rejected.
///
#ifndef KOOPMAN_CLI_CONFIG_HPP
#define KOOPMAN_CLI_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <koopman/io/bundle.hpp>

namespace koopman::cli
{

using io::Json;

class ConfigError : public InvalidArgument
{
public:
    using InvalidArgument::InvalidArgument;
};

inline const Json& config_template()
{
    static const Json t = Json::parse(R"({
      "name": "custom",
      "seed": 0,
      "out": "out",
      "dataset": {
        "source": "duffing",
        "file": "",
        "n_traj": 100,
        "test_n_traj": 0,
        "samples": 11,
        "dt": 0.25,
        "duffing": {"delta": 0.5, "beta": -1.0, "alpha": 1.0},
        "ks": {"L": 25.132741228718345, "n_modes": 128, "ic_amplitude": 1.0, "burn_in": 0.0},
        "pod_modes": 0,
        "pod_subtract_mean": false,
        "delays": 1,
        "delay_lag": 1
      },
      "split": {"scheme": "by_trajectory", "ratios": [0.9, 0.1, 0.0]},
      "kdmd": {"kernel": "gaussian_rbf", "sigma": 10.0, "degree": 2, "offset": 1.0, "rank": 27, "max_pairs": 1000},
      "bpod": {"horizon": 10, "output_rank": 2, "order": 3},
      "mkrecon": {"enabled": true, "kernel": "gaussian_rbf", "sigma": 10.0, "degree": 2, "offset": 1.0,
                  "r1": 3, "r2": 8, "gamma": 1e-4},
      "lran": {
        "widths_enc": [2, 32, 32, 16, 16, 8, 3],
        "widths_dec": [3, 8, 16, 16, 32, 32, 2],
        "constraint": [],
        "T": 10, "delta": 0.8, "beta": 1.0, "eps1": 1e-6, "eps2": 1e-6, "omega_weight": 0.0,
        "lr0": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps_adam": 1e-8,
        "decay_factor": 0.01, "decay_steps": 400000, "total_steps": 400000, "batch_size": 50,
        "eval_every": 1000, "max_eval_windows": 2000
      },
      "eval": {"max_horizon": 10, "stride": 1, "basin": false, "basin_points": 1000}
    })");
    return t;
}

namespace detail
{

inline const std::map<std::string, std::string>& preset_texts()
{
    static const std::map<std::string, std::string> p = {
        {"duffing_lran_free", R"({
          "name": "duffing_lran_free",
          "dataset": {"source": "duffing", "n_traj": 10000, "test_n_traj": 10000, "samples": 11, "dt": 0.25},
          "split": {"scheme": "by_trajectory", "ratios": [0.9, 0.1, 0.0]},
          "lran": {"widths_enc": [2, 32, 32, 16, 16, 8, 3], "widths_dec": [3, 8, 16, 16, 32, 32, 2],
                   "T": 10, "delta": 0.8, "beta": 1.0, "batch_size": 50, "lr0": 1e-3,
                   "decay_factor": 0.01, "decay_steps": 400000, "total_steps": 400000},
          "eval": {"max_horizon": 10, "basin": true, "basin_points": 110000}
        })"},
        {"duffing_lran_constrained", R"({
          "name": "duffing_lran_constrained",
          "dataset": {"source": "duffing", "n_traj": 10000, "test_n_traj": 10000, "samples": 11, "dt": 0.25},
          "split": {"scheme": "by_trajectory", "ratios": [0.9, 0.1, 0.0]},
          "lran": {"widths_enc": [2, 32, 32, 16, 16, 8, 3], "widths_dec": [3, 8, 16, 16, 32, 32, 2],
                   "constraint": [{"re": 0.0, "im": 0.0}, {"re": -0.25, "im": 1.3919410907075054}],
                   "T": 10, "delta": 0.8, "beta": 1.0, "batch_size": 50, "lr0": 1e-3,
                   "decay_factor": 0.01, "decay_steps": 400000, "total_steps": 400000},
          "eval": {"max_horizon": 10, "basin": true, "basin_points": 110000}
        })"},
        {"duffing_kdmd_rom", R"({
          "name": "duffing_kdmd_rom",
          "dataset": {"source": "duffing", "n_traj": 10000, "test_n_traj": 10000, "samples": 11, "dt": 0.25},
          "split": {"scheme": "by_trajectory", "ratios": [0.9, 0.1, 0.0]},
          "kdmd": {"kernel": "gaussian_rbf", "sigma": 10.0, "rank": 27, "max_pairs": 1000},
          "bpod": {"horizon": 10, "output_rank": 2, "order": 3},
          "mkrecon": {"enabled": true, "kernel": "gaussian_rbf", "sigma": 10.0, "r1": 3, "r2": 8, "gamma": 1e-4},
          "eval": {"max_horizon": 10, "basin": true, "basin_points": 1000}
        })"},
        {"ks_lran", R"({
          "name": "ks_lran",
          "dataset": {"source": "ks", "n_traj": 60, "samples": 500, "dt": 1.0, "delays": 2},
          "split": {"scheme": "by_trajectory", "ratios": [1.0, 1.0, 1.0]},
          "lran": {"widths_enc": [256, 32, 32, 16, 16], "widths_dec": [16, 16, 32, 32, 256],
                   "T": 5, "delta": 0.9, "beta": 1.0, "batch_size": 50, "lr0": 1e-3,
                   "decay_factor": 0.1, "decay_steps": 200000, "total_steps": 400000},
          "eval": {"max_horizon": 10, "basin": false}
        })"},
        {"ks_kdmd_rom", R"({
          "name": "ks_kdmd_rom",
          "dataset": {"source": "ks", "n_traj": 60, "samples": 500, "dt": 1.0, "delays": 2},
          "split": {"scheme": "by_trajectory", "ratios": [1.0, 1.0, 1.0]},
          "kdmd": {"kernel": "gaussian_rbf", "sigma": 10.0, "rank": 60, "max_pairs": 2000},
          "bpod": {"horizon": 5, "output_rank": 60, "order": 16},
          "mkrecon": {"enabled": true, "kernel": "gaussian_rbf", "sigma": 100.0, "r1": 16, "r2": 60, "gamma": 1e-7},
          "eval": {"max_horizon": 10, "basin": false}
        })"},
        {"cylinder_ingest", R"({
          "name": "cylinder_ingest",
          "dataset": {"source": "file", "file": "cylinder.kpd1", "pod_modes": 200, "delays": 2, "delay_lag": 2},
          "split": {"scheme": "odd_even_interleave"},
          "kdmd": {"kernel": "gaussian_rbf", "sigma": 10.0, "rank": 100, "max_pairs": 1000},
          "bpod": {"horizon": 20, "output_rank": 100, "order": 5},
          "mkrecon": {"enabled": true, "kernel": "gaussian_rbf", "sigma": 10.0, "r1": 5, "r2": 15, "gamma": 1e-8},
          "lran": {"widths_enc": [400, 100, 50, 20, 10, 5], "widths_dec": [5, 10, 20, 50, 100, 400],
                   "T": 20, "delta": 0.95, "beta": 1.0, "batch_size": 50, "lr0": 1e-3,
                   "decay_factor": 0.01, "decay_steps": 200000, "total_steps": 200000},
          "eval": {"max_horizon": 20, "basin": false}
        })"},
    };
    return p;
}

inline std::string type_name(const Json& j)
{
    if (j.is_number())
        return "number";
    return j.type_name();
}

inline void check_against(const Json& tmpl, const Json& user, const std::string& path)
{
    if (tmpl.is_object())
    {
        if (!user.is_object())
            throw ConfigError("config: '" + path + "' must be an object");
        for (const auto& [key, value] : user.items())
        {
            const std::string sub = path.empty() ? key : path + "." + key;
            if (!tmpl.contains(key))
                throw ConfigError("config: unknown key '" + sub + "'");
            check_against(tmpl.at(key), value, sub);
        }
        return;
    }
    if (tmpl.is_array())
    {
        if (!user.is_array())
            throw ConfigError("config: '" + path + "' must be an array");
        return;
    }
    if (type_name(tmpl) != type_name(user))
        throw ConfigError("config: '" + path + "' must be a " + type_name(tmpl) + ", got " + type_name(user));
}

inline void merge_into(Json& base, const Json& patch)
{
    for (const auto& [key, value] : patch.items())
    {
        if (value.is_object() && base.contains(key) && base.at(key).is_object())
            merge_into(base[key], value);
        else
            base[key] = value;
    }
}

} // namespace detail

inline std::vector<std::string> preset_names()
{
    std::vector<std::string> out;
    for (const auto& [name, text] : detail::preset_texts())
        out.push_back(name);
    return out;
}

inline Json preset(const std::string& name)
{
    const auto& p = detail::preset_texts();
    const auto it = p.find(name);
    if (it == p.end())
        throw ConfigError("config: unknown preset '" + name + "'");
    return Json::parse(it->second);
}

/// Validates `patch` against the schema and merges it over `base`.
inline void apply_patch(Json& base, const Json& patch)
{
    detail::check_against(config_template(), patch, "");
    detail::merge_into(base, patch);
}

inline Json load_json_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError(path + ": cannot open config");
    try
    {
        return Json::parse(is);
    }
    catch (const Json::exception& e)
    {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
}

/// Template, then preset, then user file; explicit seed/out override last.
inline Json resolve_config(const std::string& preset_name, const std::string& config_path,
                           const std::optional<std::uint64_t>& seed, const std::string& out)
{
    Json cfg = config_template();
    if (!preset_name.empty())
        apply_patch(cfg, preset(preset_name));
    if (!config_path.empty())
        apply_patch(cfg, load_json_file(config_path));
    if (seed)
        cfg["seed"] = *seed;
    if (!out.empty())
        cfg["out"] = out;
    return cfg;
}

/// FNV-1a over the canonical (key-sorted) serialization.
inline std::string config_hash(const Json& cfg)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : cfg.dump())
    {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

/// Typed access that turns JSON type errors into config errors.
template <class T>
T get(const Json& cfg, const std::string& section, const std::string& key)
{
    try
    {
        return cfg.at(section).at(key).get<T>();
    }
    catch (const Json::exception& e)
    {
        throw ConfigError("config: '" + section + "." + key + "': " + e.what());
    }
}

} // namespace koopman::cli

#endif
