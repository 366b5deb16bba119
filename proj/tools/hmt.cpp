#include <iostream>

#include "CLI11.hpp"
#include "hmt/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multi-task tagger for joint entity and relation extraction"};
  app.require_subcommand(1);

  hmt::TrainOptions train;
  std::uint64_t seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write model.ckpt and train.log");
  train_cmd->add_option("--data", train.data, "Training records (JSON lines)")->required()->check(CLI::ExistingFile);
  auto* pretrained = train_cmd->add_option("--pretrained", "Pretrained word vectors (text format)")->check(CLI::ExistingFile);
  auto* config = train_cmd->add_option("--config", "Training configuration (JSON)")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  auto* seed_opt = train_cmd->add_option("--seed", seed, "Random seed (overrides the config)");
  train_cmd->add_flag("--ablate-ee", train.ablate_ee, "Train without the EE module");

  std::string eval_ckpt, eval_data;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on annotated data");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data)->required()->check(CLI::ExistingFile);

  std::string pred_ckpt, pred_data, pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "Extract entities and triples");
  predict_cmd->add_option("--checkpoint", pred_ckpt)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--data", pred_data)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", pred_out, "Output records (JSON lines)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      if (*pretrained) train.pretrained = pretrained->as<std::string>();
      if (*config) train.config = config->as<std::string>();
      if (*seed_opt) train.seed = seed;
      hmt::cmd_train(train, std::cout, std::cerr);
    } else if (*eval_cmd) {
      hmt::cmd_eval(eval_ckpt, eval_data, std::cout, std::cerr);
    } else if (*predict_cmd) {
      const auto n = hmt::cmd_predict(pred_ckpt, pred_data, pred_out, std::cerr);
      std::cerr << "wrote " << n << " records to " << pred_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
