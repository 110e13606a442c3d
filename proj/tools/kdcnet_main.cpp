// SPDX-License-Identifier: Apache-2.0
//
// kdcnet: synthetic-corpus retrieval experiments from the command line.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
// failure (non-finite loss or gradient check failure).

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kdc/cli.hpp"

namespace {

std::vector<std::string> split_values(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        if (comma == std::string::npos) comma = csv.size();
        std::string item = csv.substr(start, comma - start);
        if (!item.empty()) {
            out.push_back(item);
        }
        start = comma + 1;
        if (comma == csv.size()) break;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale partially relevant video retrieval experiments"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic paired corpus");
    kdc::cli::SynthOptions synth_opts;
    synth->add_option("--out", synth_opts.out, "output corpus directory")->required();
    synth->add_option("--count", synth_opts.spec.count, "corpus size");
    synth->add_option("--frames", synth_opts.spec.frames, "frames per video");
    synth->add_option("--dim", synth_opts.spec.dim, "student feature dim");
    synth->add_option("--teacher-dim", synth_opts.spec.teacher_dim, "teacher feature dim");
    synth->add_option("--query-len", synth_opts.spec.query_len, "tokens per query");
    synth->add_option("--moment-min", synth_opts.spec.moment_min, "shortest moment");
    synth->add_option("--moment-max", synth_opts.spec.moment_max, "longest moment");
    synth->add_option("--noise", synth_opts.spec.noise, "feature noise level");
    synth->add_option("--train-fraction", synth_opts.spec.train_fraction,
                      "train split fraction");
    synth->add_option("--seed", synth_opts.spec.seed, "random seed");

    // train
    auto* train = app.add_subcommand("train", "train the dual-branch student");
    kdc::cli::TrainOptions train_opts;
    std::uint64_t train_seed = 0;
    train->add_option("--config", train_opts.config, "experiment config file");
    train->add_option("--data", train_opts.data, "dataset directory")->required();
    train->add_option("--out", train_opts.out, "output directory")->required();
    auto* seed_flag = train->add_option("--seed", train_seed, "seed override");

    // eval
    auto* eval = app.add_subcommand("eval", "rank a corpus with a trained checkpoint");
    kdc::cli::EvalOptions eval_opts;
    double eval_delta = 0.0;
    eval->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint directory")
        ->required();
    eval->add_option("--data", eval_opts.data, "dataset directory")->required();
    eval->add_option("--out", eval_opts.out, "report output directory");
    auto* delta_flag = eval->add_option("--delta", eval_delta, "fusion weight override");

    // refine
    auto* refine = app.add_subcommand("refine", "refine teacher score rows");
    kdc::cli::RefineOptions refine_opts;
    refine->add_option("--in", refine_opts.input, "input CSV of score rows")->required();
    refine->add_option("--out", refine_opts.output, "output CSV")->required();
    refine->add_option("--window", refine_opts.window, "sliding window size");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    std::uint64_t gc_seed = 1;
    int gc_seeds = 5;
    gradcheck->add_option("--seed", gc_seed, "first seed");
    gradcheck->add_option("--seeds", gc_seeds, "number of seeds");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "train/eval across one config key");
    kdc::cli::SweepOptions sweep_opts;
    std::string sweep_values;
    sweep->add_option("--config", sweep_opts.config, "experiment config file");
    sweep->add_option("--data", sweep_opts.data, "corpus root with train/ and test/")
        ->required();
    sweep->add_option("--out", sweep_opts.out, "output directory");
    sweep->add_option("--param", sweep_opts.parameter, "config key to vary")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            kdc::cli::run_synth(synth_opts);
        } else if (*train) {
            if (*seed_flag) {
                train_opts.seed = train_seed;
            }
            kdc::cli::run_train(train_opts);
        } else if (*eval) {
            if (*delta_flag) {
                eval_opts.delta = eval_delta;
            }
            kdc::cli::run_eval(eval_opts, std::cout);
        } else if (*refine) {
            kdc::cli::run_refine(refine_opts);
        } else if (*gradcheck) {
            auto rows = kdc::cli::run_gradcheck(gc_seed, gc_seeds, std::cout);
            for (const auto& row : rows) {
                if (!row.pass) {
                    return 3;
                }
            }
        } else if (*sweep) {
            sweep_opts.values = split_values(sweep_values);
            kdc::cli::run_sweep(sweep_opts, std::cout);
        }
    } catch (const kdc::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const kdc::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const kdc::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const kdc::dimension_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const kdc::domain_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
