// Command-line front end for the Koopman modelling pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include <koopman/cli/commands.hpp>

namespace kc = koopman::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Koopman operator models: EDMD/KDMD, balanced ROMs and LRANs"};
    app.require_subcommand(0, 1);

    std::string preset;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string model;
    bool list_presets = false;
    bool quiet        = false;

    app.add_option("--preset", preset, "Named preset (see --list-presets)");
    app.add_option("--config", config_path, "JSON config merged over the preset");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--out", out, "Output directory");
    app.add_flag("--list-presets", list_presets, "Print preset names and exit");
    app.add_flag("-q,--quiet", quiet, "Suppress training progress");

    const std::pair<const char*, const char*> commands[] = {
        {"generate", "Simulate or ingest data and write train/eval/test splits"},
        {"fit-kdmd", "Fit kernel DMD on the training pairs"},
        {"balred", "Balanced truncation of the KDMD model"},
        {"fit-mkrecon", "Fit the multi-kernel reconstruction map"},
        {"train-lran", "Train the linearly recurrent autoencoder"},
        {"predict", "Roll out fitted models on the test set"},
        {"evaluate", "Error curves and basin classification"},
        {"spectrum", "Eigenvalue table of every fitted model"},
        {"show-config", "Print the resolved configuration"}};
    for (const auto& [n, help] : commands)
    {
        CLI::App* sub = app.add_subcommand(n, help);
        if (std::string(n) == "predict" || std::string(n) == "evaluate")
            sub->add_option("--model", model, "rom or lran (default: every fitted model)");
    }
    app.fallthrough();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kc::exit_ok : kc::exit_config;
    }
    if (list_presets)
    {
        for (const auto& p : kc::preset_names())
            std::cout << p << '\n';
        return kc::exit_ok;
    }
    if (app.get_subcommands().empty())
    {
        std::cerr << "A subcommand is required\nRun with --help for more information.\n";
        return kc::exit_config;
    }

    try
    {
        const kc::Workspace w(kc::resolve_config(preset, config_path, seed, out));
        const std::string cmd = app.get_subcommands().front()->get_name();
        koopman::io::Json result;
        auto models = [&] { return model.empty() ? kc::available_models(w) : std::vector<std::string>{model}; };

        if (cmd == "generate")
            result = kc::cmd_generate(w);
        else if (cmd == "fit-kdmd")
            result = kc::cmd_fit_kdmd(w);
        else if (cmd == "balred")
            result = kc::cmd_balred(w);
        else if (cmd == "fit-mkrecon")
            result = kc::cmd_fit_mkrecon(w);
        else if (cmd == "train-lran")
            result = kc::cmd_train_lran(w, !quiet);
        else if (cmd == "predict" || cmd == "evaluate")
        {
            const auto tags = models();
            if (tags.empty())
                throw koopman::IoError("no fitted model found in " + w.path(""));
            for (const auto& t : tags)
                result[t] = cmd == "predict" ? kc::cmd_predict(w, t) : kc::cmd_evaluate(w, t);
        }
        else if (cmd == "spectrum")
            result = kc::cmd_spectrum(w);
        else if (cmd == "show-config")
            result = w.config();
        std::cout << result.dump(2) << '\n';
        return kc::exit_ok;
    }
    catch (const koopman::InvalidArgument& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kc::exit_config;
    }
    catch (const koopman::NumericalError& e)
    {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kc::exit_numerical;
    }
    catch (const koopman::IoError& e)
    {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kc::exit_io;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kc::exit_failure;
    }
}
