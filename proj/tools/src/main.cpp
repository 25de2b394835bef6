#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "lordba/error.hpp"
#include "lordba/parallel.hpp"
#include "report.hpp"

int main(int argc, char** argv) {
  using namespace lordba::cli;

  CLI::App app{"Low-rank double-binary adapters: compression, training, kernels and checks",
               "lordba"};
  app.set_version_flag("--version", version());
  app.set_config("--config", "", "Key-value file with option defaults (one [section] per subcommand)");
  app.require_subcommand(1);

  app.add_option_function<std::size_t>(
         "--threads", [](std::size_t n) { lordba::set_thread_count(n); },
         "Worker threads (default: LORDBA_THREADS, else 1)")
      ->check(CLI::PositiveNumber);

  add_compress(app);
  add_train_toy(app);
  add_reconstruct(app);
  add_diagnose(app);
  add_mc_validate(app);
  add_bench_kernel(app);
  add_synth(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const lordba::Error& e) {
    std::cerr << "lordba: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "lordba: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
