#include "more3d/ablation.hpp"

#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "more3d/evaluate.hpp"
#include "more3d/text.hpp"

namespace more3d {

using json = nlohmann::json;

std::vector<AblationCell> loss_ablation_cells(HeadMode head_mode) {
  std::vector<AblationCell> cells;
  cells.push_back({"none", {false, false, true}, head_mode});
  cells.push_back({"ans", {true, false, true}, head_mode});
  cells.push_back({"mask", {false, true, true}, head_mode});
  cells.push_back({"ans+mask", {true, true, true}, head_mode});
  return cells;
}

std::vector<AblationCell> head_ablation_cells() {
  return {{"unified", {}, HeadMode::kUnified},
          {"separated", {}, HeadMode::kSeparated}};
}

std::vector<AblationResult> run_ablation(const std::vector<AblationCell>& cells,
                                         const Dataset& train,
                                         const Dataset& eval_split,
                                         const ModelConfig& base_config,
                                         const TrainConfig& train_config) {
  std::vector<std::string> corpus;
  for (const auto& sample : train.samples) {
    corpus.push_back(sample.question);
    corpus.push_back(sample.answer);
  }
  const Vocab vocab = Vocab::build(corpus);

  std::vector<AblationResult> results;
  for (const auto& cell : cells) {
    AblationResult result;
    result.name = cell.name;
    try {
      ModelConfig config = base_config;
      config.head_mode = cell.head_mode;
      config.vocab_size = vocab.size();
      Model<float> model(config);
      TrainConfig cfg = train_config;
      cfg.losses = cell.losses;
      cfg.eval_every = 0;  // evaluate once below
      train_loop(model, vocab, train, Dataset{}, cfg, "");
      const EvalSummary summary =
          evaluate_model(model, vocab, eval_split, {cfg.gen_max_len});
      result.trained = true;
      result.ciou = summary.ciou;
      result.giou = summary.giou;
    } catch (const std::exception& e) {
      result.trained = false;
      result.error = e.what();
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::string ablation_table_text(const std::vector<AblationResult>& results) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "cell" << std::right << std::setw(10)
      << "cIoU" << std::setw(10) << "gIoU" << std::setw(10) << "status"
      << "\n";
  for (const auto& result : results) {
    out << std::left << std::setw(12) << result.name << std::right
        << std::fixed << std::setprecision(4);
    if (result.trained) {
      out << std::setw(10) << result.ciou << std::setw(10) << result.giou
          << std::setw(10) << "ok";
    } else {
      out << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(10)
          << "failed";
    }
    out << "\n";
  }
  return out.str();
}

std::string ablation_table_json(const std::vector<AblationResult>& results) {
  json rows = json::array();
  for (const auto& result : results) {
    json row;
    row["cell"] = result.name;
    row["trained"] = result.trained;
    if (result.trained) {
      row["ciou"] = result.ciou;
      row["giou"] = result.giou;
    } else {
      row["error"] = result.error;
    }
    rows.push_back(std::move(row));
  }
  return rows.dump(2);
}

}  // namespace more3d
