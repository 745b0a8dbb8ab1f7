#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Eye-tracking edge inference toolkit: synthetic data, training, optimisation, evaluation, "
               "benchmarking and a loopback edge service."};
  app.require_subcommand(1, 1);
  eyeedge::cli::Runner run;
  eyeedge::cli::add_synth(app, run);
  eyeedge::cli::add_train(app, run);
  eyeedge::cli::add_optimize(app, run);
  eyeedge::cli::add_eval(app, run);
  eyeedge::cli::add_bench(app, run);
  eyeedge::cli::add_serve(app, run);
  eyeedge::cli::add_client(app, run);
  eyeedge::cli::add_heatmap(app, run);
  eyeedge::cli::add_report(app, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run ? run() : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
