#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vortexswim/harness.hpp"

using namespace vortexswim::harness;

namespace {

void common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "config file (flat key = value)");
  cmd->add_option("--seed", o.seed, "overrides run.seed");
  cmd->add_option("--out", o.out, "run directory (default runs/<command>-seed<N>)");
  cmd->add_flag("--quiet", o.quiet, "only summary output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-propelled fish navigating a cylinder wake: solver validation, DQN training, "
               "evaluation and field export."};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "run the solver validation suites");
  common(validate, o);
  validate->add_option("--only", o.only, "subset of suites")->delimiter(',')
      ->check(CLI::IsMember(validation_suites()));

  auto* train = app.add_subcommand("train", "train the agent");
  common(train, o);
  train->add_flag("--resume", o.resume, "continue from <out>/checkpoints/latest.vswq");
  train->add_option("--episodes", o.episodes, "overrides train.episodes");

  auto* eval = app.add_subcommand("eval", "greedy rollouts over a sweep of start points");
  common(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "VSWQ1 checkpoint");
  eval->add_flag("--untrained", o.untrained, "use a freshly initialized network");
  eval->add_option("--sweep", o.sweep, "start x sweep A:B:N");

  auto* fields = app.add_subcommand("fields", "write VSWM1 field snapshots");
  common(fields, o);
  fields->add_option("--cadence", o.cadence, "ticks between snapshots");
  fields->add_option("--ticks", o.ticks, "overrides fields.ticks");
  fields->add_option("--checkpoint", o.checkpoint, "steer with this policy instead of steady swimming");
  fields->add_flag("--untrained", o.untrained, "steer with a freshly initialized network");
  fields->add_flag("--spinup", o.spinup, "write the warm-start population file and stop");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*validate) return cmd_validate(o, std::cerr);
  if (*train) return cmd_train(o, std::cerr);
  if (*eval) return cmd_eval(o, std::cerr);
  if (*fields) return cmd_fields(o, std::cerr);
  return kExitUsage;
}
