#include "civ/cli/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int
main(int argc, char** argv)
{
  CLI::App app{"civ-scan: compartment interface vulnerability scanner for MiniKer corpora"};
  app.set_version_flag("--version", std::string(civ::kToolVersion));
  app.require_subcommand(1);

  civ::cli::RunConfig config;
  auto* analyze = app.add_subcommand("analyze", "Quantify interface vulnerabilities under a hardening mode");
  analyze->add_option("inputs", config.inputs, "MiniKer source files");
  analyze->add_option("--config", config.boundary_config, "Boundary config (TOML)");
  analyze->add_option("--mode", config.mode, "baseline, cfi or memsafe");
  analyze->add_option("--format", config.format, "json, table or csv");
  analyze->add_option("--output,-o", config.output, "Report path (default: standard output)");
  analyze->add_option("--dump-ir", config.dump_ir, "Write the lowered IR to this path");
  analyze->add_option("--dump-pdg", config.dump_pdg, "Write the dependence graph as JSON to this path");
  analyze->add_option("--emit-traces", config.emit_traces, "Write one JSON trace per line to this path");
  analyze->add_option("--jobs,-j", config.jobs, "Worker threads");
  analyze->add_option("--kind", config.kind, "Keep one temporal kind: sac, lock or alloc");

  std::vector<std::string> metric_inputs;
  std::string metric_config;
  bool metrics = false;
  auto* boundary = app.add_subcommand("boundary", "Measure interface oversharing");
  boundary->add_option("inputs", metric_inputs, "MiniKer source files");
  boundary->add_option("--config", metric_config, "Boundary config (TOML)");
  boundary->add_flag("--metrics", metrics, "Print deep,accessed,shared as CSV");

  std::string base_report;
  std::string hardened_report;
  std::string diff_format = "table";
  auto* diff = app.add_subcommand("diff", "Compare two reports of the same corpus");
  diff->add_option("base", base_report, "Report of the weaker mode")->required();
  diff->add_option("hardened", hardened_report, "Report of the stronger mode")->required();
  diff->add_option("--format", diff_format, "table, csv or json");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForVersion& e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e)
  {
    civ::cli::print_error(std::cerr, civ::ConfigError(e.what(), civ::SourcePos{"<command line>", 1, 1, 0}));
    return 1;
  }

  if (*analyze)
    return civ::cli::run(config, std::cout, std::cerr);
  if (*boundary)
    return civ::cli::run_boundary_metrics(metric_inputs, metric_config, std::cout, std::cerr);
  return civ::cli::run_diff(base_report, hardened_report, diff_format, std::cout, std::cerr);
}
