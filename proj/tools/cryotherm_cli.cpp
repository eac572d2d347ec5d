// Command-line front end. Exit codes: 0 success, 1 usage, 2 data error.

#include "cli_common.hpp"

#include "cryotherm/errors.hpp"

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
    using namespace cryotherm;
    CLI::App app{"cryotherm: cantilever and flux-noise thermometry toolkit"};
    app.set_version_flag("--version", CRYOTHERM_VERSION);
    app.require_subcommand(1);
    app.footer("Output directory defaults to $" + std::string(cli::kOutDirEnv) + "/<command>.");
    cli::add_simulate(app);
    cli::add_psd(app);
    cli::add_lockin(app);
    cli::add_temp(app);
    cli::add_mfft_calibrate(app);
    cli::add_mfft_temp(app);
    cli::add_dispcal(app);
    cli::add_fit(app);
    cli::add_report(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
