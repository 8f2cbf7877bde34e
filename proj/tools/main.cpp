#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scrublab/experiment.hpp"

namespace fs = std::filesystem;
using namespace scrublab;

namespace {

fs::path default_out() {
  if (const char* env = std::getenv("SCRUBLAB_OUT")) return fs::path(env);
  return fs::path("runs");
}

run_paths paths_for(const experiment_spec& exp, const fs::path& out) {
  return run_paths{out / exp.name};
}

void print_partition_summary(const experiment_spec& exp, const run_paths& paths) {
  std::uint64_t hash = 0;
  const auto docs = load_corpus_jsonl(paths.corpus_file(), false, &hash);
  const auto parts = partition(docs, exp.corpus.ratios, exp.corpus.seed);
  int fields = 0;
  for (const auto& d : parts.train_pri) fields += static_cast<int>(extract(d).size());
  std::cout << "corpus " << docs.size() << " docs -> valid " << parts.valid.size()
            << ", train_pub " << parts.train_pub.size() << ", train_pri " << parts.train_pri.size()
            << " (" << fields << " attackable private fields)\n";
  std::cout << "spec_hash " << to_hex(hash) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruction-risk lab for layout-aware document encoders"};
  app.require_subcommand(1);

  std::string exp_file;
  fs::path out = default_out();
  bool force = false;
  bool resume = false;
  int workers = 1;
  std::vector<std::string> run_dirs;
  std::vector<std::string> exp_files;

  auto* gen = app.add_subcommand("generate", "Write the corpus and vocabulary for an experiment");
  gen->add_option("-e,--experiment", exp_file, "experiment json file")->required();
  gen->add_option("-o,--out", out, "output root (default $SCRUBLAB_OUT or ./runs)");
  gen->add_flag("--force", force, "overwrite existing outputs");

  auto* trn = app.add_subcommand("train", "Train the target and public models");
  trn->add_option("-e,--experiment", exp_file, "experiment json file")->required();
  trn->add_option("-o,--out", out, "output root (default $SCRUBLAB_OUT or ./runs)");
  trn->add_flag("--force", force, "overwrite existing outputs");
  trn->add_flag("--resume", resume, "continue from the latest saved epoch");

  auto* atk = app.add_subcommand("attack", "Run the reconstruction game plus matched baseline");
  atk->add_option("-e,--experiment", exp_file, "experiment json file")->required();
  atk->add_option("-o,--out", out, "output root (default $SCRUBLAB_OUT or ./runs)");
  atk->add_flag("--force", force, "overwrite existing outputs");
  atk->add_option("-w,--workers", workers, "field-level worker threads")
      ->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Aggregate finished runs into a table and curves");
  rep->add_option("-r,--run", run_dirs, "run directory (repeatable)")->required();
  rep->add_option("-o,--out", out, "report output directory")->required();
  rep->add_flag("--force", force, "overwrite existing outputs");

  auto* swp = app.add_subcommand("sweep", "Run experiment files end to end, then report");
  swp->add_option("-e,--experiment", exp_files, "experiment json file (repeatable)")->required();
  swp->add_option("-o,--out", out, "output root (default $SCRUBLAB_OUT or ./runs)");
  swp->add_flag("--force", force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      const experiment_spec exp = load_experiment(exp_file, nullptr);
      const run_paths paths = paths_for(exp, out);
      cmd_generate(exp, paths, force);
      print_partition_summary(exp, paths);
      std::cout << "generated " << paths.corpus_dir().string() << "\n";
    } else if (trn->parsed()) {
      const experiment_spec exp = load_experiment(exp_file, nullptr);
      const run_paths paths = paths_for(exp, out);
      cmd_train(exp, paths, force, resume);
      std::cout << "trained " << paths.root.string() << "\n";
    } else if (atk->parsed()) {
      const experiment_spec exp = load_experiment(exp_file, nullptr);
      const run_paths paths = paths_for(exp, out);
      cmd_attack(exp, paths, force, workers);
      std::cout << "attacked " << paths.attack_dir().string() << "\n";
    } else if (rep->parsed()) {
      std::vector<fs::path> roots(run_dirs.begin(), run_dirs.end());
      cmd_report(roots, out, force);
      std::cout << "report " << (out / "report.csv").string() << "\n";
    } else if (swp->parsed()) {
      std::vector<fs::path> files(exp_files.begin(), exp_files.end());
      cmd_sweep(files, out, force);
      std::cout << "sweep report " << (out / "report" / "report.csv").string() << "\n";
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
