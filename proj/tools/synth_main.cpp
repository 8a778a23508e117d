#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fairshare/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fairshare-synth: popularity-skewed synthetic ratings generator"};

    fairshare::SynthConfig cfg;
    std::string outPath = "synthetic.csv";
    app.add_option("-u,--users", cfg.userCount, "Number of users");
    app.add_option("-i,--items", cfg.itemCount, "Number of items");
    app.add_option("-s,--seed", cfg.seed, "Generator seed");
    app.add_option("--mainstream-share", cfg.mainstreamShare, "Fraction of mainstream users");
    app.add_option("--average-share", cfg.averageShare, "Fraction of average users");
    app.add_option("-o,--out", outPath, "Output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        const fairshare::RatingsDataset ds = fairshare::generateSynthetic(cfg);
        ds.saveCanonical(outPath);
        std::cout << outPath << ": " << ds.records().size() << " ratings, " << ds.userCount()
                  << " users, " << ds.itemCount() << " items\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
