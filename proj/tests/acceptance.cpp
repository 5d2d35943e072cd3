#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "app.hpp"

using namespace stochavg::app;

// Usage: acceptance [--only 1,4,7] [--paths N] [--scratch DIR]
int main(int argc, char** argv)
{
    AcceptanceOptions opts;
    opts.scratch_dir = (std::filesystem::temp_directory_path() / "stochavg_acceptance").string();
    for (int i = 1; i + 1 < argc; i += 2)
    {
        std::string const key = argv[i];
        std::string const value = argv[i + 1];
        if (key == "--only")
        {
            std::stringstream ss(value);
            std::string id;
            while (std::getline(ss, id, ','))
                opts.only.push_back(std::stoi(id));
        }
        else if (key == "--paths")
        {
            opts.paths = std::stoul(value);
        }
        else if (key == "--scratch")
        {
            opts.scratch_dir = value;
        }
    }
    auto const config = stochavg::load_system_config(bundled_acceptance_config());
    auto const results = run_acceptance_suite(config, opts, std::cout);
    std::size_t passed = 0;
    for (auto const& r : results)
        passed += r.pass ? 1 : 0;
    std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
    return passed == results.size() ? 0 : 1;
}
