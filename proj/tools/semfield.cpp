// Copyright 2026 The Semfield Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// semfield command-line tool.
//
// Failures print one line "semfield: error[<kind>]: <message>" to stderr
// and exit with status 2 (status 1 for usage errors).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semfield/dataset.hpp"
#include "semfield/evaluation.hpp"
#include "semfield/formats.hpp"
#include "semfield/frames_io.hpp"
#include "semfield/model.hpp"
#include "semfield/query.hpp"
#include "semfield/run_config.hpp"
#include "semfield/synthetic.hpp"
#include "semfield/trainer.hpp"

namespace fs = std::filesystem;
using namespace semfield;

namespace {

std::vector<std::string> ReadLabelList(const fs::path& path) {
  const Json j = ReadJsonFile(path);
  const Json& list = j.is_object() && j.contains("labels") ? j.at("labels") : j;
  try {
    return list.get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kInvalidInput, path.string() + ": expected a list of label strings");
  }
}

Json AabbJson(const Aabb& b) {
  return {{"min", {b.min.x, b.min.y, b.min.z}}, {"max", {b.max.x, b.max.y, b.max.z}}};
}

fs::path SidecarPath(const fs::path& model_path) {
  return fs::path(model_path.string() + ".json");
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  fs::path out;
  std::uint64_t seed = 7;
  std::uint32_t frames = 24;
};

void RunSynth(const SynthArgs& a) {
  SyntheticConfig cfg;
  cfg.seed = a.seed;
  cfg.num_frames = a.frames;
  const SyntheticScene scene = GenerateSyntheticScene(cfg);
  fs::create_directories(a.out / "frames");
  fs::create_directories(a.out / "queries");
  for (const auto& f : scene.frames) WriteFrame(a.out / "frames" / f.id, f);
  WriteDetections(a.out / "detections.jsonl", scene.detections);
  WriteJsonFile(a.out / "labels.json", Json(scene.tables.labels));
  WriteEmbeddingTable(a.out / "text.sfe", scene.tables.text);
  WriteEmbeddingTable(a.out / "image.sfe", scene.tables.image);

  // The held-out box must match the prepared training set, so build it the
  // same way from the on-disk (millimeter-quantized) frames.
  const auto frames = LoadFrames(a.out / "frames");
  const auto detections = ReadDetections(a.out / "detections.jsonl", frames, scene.tables.labels);
  const SceneDataset train = BuildDataset(frames, detections, scene.tables);
  WriteDataset(HeldoutDataset(scene, train.aabb), a.out / "heldout.sfd");

  for (std::uint32_t r = 0; r < kSyntheticRegions; ++r) {
    const std::string name = SyntheticRegionName(r);
    const auto text = scene.tables.text.Row(r);
    const auto image = scene.tables.image.Row(scene.region_image_row[r]);
    WriteQuery(a.out / "queries" / (name + ".sfq"),
               QueryEmbedding::Make(std::vector<float>(text.begin(), text.end()), std::nullopt));
    WriteQuery(a.out / "queries" / (name + "_view.sfq"),
               QueryEmbedding::Make(std::nullopt, std::vector<float>(image.begin(), image.end())));
  }
  RunConfig rc;
  rc.model = DeskScaleModelConfig(train.aabb);
  rc.train = DeskScaleTrainConfig(train.size(), 1);
  WriteJsonFile(a.out / "config.json", ToJson(rc));
  std::cout << "frames " << scene.frames.size() << "\n"
            << "detections " << scene.detections.size() << "\n"
            << "records " << train.size() << "\n"
            << "heldout " << scene.heldout_points.size() << "\n";
}

// -------------------------------------------------------------- prepare

struct PrepareArgs {
  fs::path frames, detections, labels, text, image, out;
  double min_confidence = BuildOptions{}.min_confidence;
};

EmbeddingTables LoadTables(const fs::path& labels, const fs::path& text, const fs::path& image) {
  EmbeddingTables t;
  t.labels = ReadLabelList(labels);
  t.text = ReadEmbeddingTable(text);
  t.image = ReadEmbeddingTable(image);
  t.Validate();
  return t;
}

void RunPrepare(const PrepareArgs& a) {
  const EmbeddingTables tables = LoadTables(a.labels, a.text, a.image);
  const auto frames = LoadFrames(a.frames);
  const auto detections = ReadDetections(a.detections, frames, tables.labels);
  BuildOptions opts;
  opts.min_confidence = a.min_confidence;
  const SceneDataset ds = BuildDataset(frames, detections, tables, opts);
  WriteDataset(ds, a.out);
  const Json summary = {{"records", ds.size()},
                        {"labels", ds.tables.labels},
                        {"aabb", AabbJson(ds.aabb)}};
  std::cout << summary.dump() << "\n";
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  fs::path dataset, out, config;
  std::optional<std::uint64_t> seed, batch_size, epochs, steps, checkpoint_every;
  std::optional<double> lr;
  bool exclusive = false;
};

RunConfig ResolveRunConfig(const fs::path& config, const SceneDataset& ds) {
  RunConfig rc;
  if (!config.empty()) rc = ReadRunConfig(config, rc);
  rc.model.aabb = ds.aabb;
  rc.model.semantic_dim = static_cast<std::uint32_t>(ds.tables.text.cols);
  rc.model.visual_dim = static_cast<std::uint32_t>(ds.tables.image.cols);
  rc.model.instance_count = ds.instance_count;
  return rc;
}

void WriteTrainSidecar(const fs::path& model_path, const RunConfig& rc,
                       const FieldModel<float>& m, const std::vector<LossReport>& history,
                       const fs::path& dataset) {
  const Json j = {{"config", ToJson(rc)},
                  {"dataset", dataset.string()},
                  {"seed", rc.train.seed},
                  {"step", m.step},
                  {"history", LossHistoryJson(history)}};
  WriteJsonFile(SidecarPath(model_path), j);
}

void RunTrain(const TrainArgs& a) {
  const SceneDataset ds = ReadDataset(a.dataset);
  RunConfig rc = ResolveRunConfig(a.config, ds);
  if (a.seed) rc.train.seed = *a.seed;
  if (a.batch_size) rc.train.batch_size = *a.batch_size;
  if (a.epochs) rc.train.epochs = *a.epochs;
  if (a.steps) rc.train.max_steps = *a.steps;
  if (a.checkpoint_every) rc.train.checkpoint_every = *a.checkpoint_every;
  if (a.lr) rc.train.adam.learning_rate = *a.lr;
  if (a.exclusive) rc.train.exclusive_denominator = true;
  rc.train.Validate();

  auto model = FieldModel<float>::Create(rc.model, rc.train.seed);
  auto checkpoint = [&](const FieldModel<float>& m, const std::vector<LossReport>& h) {
    SaveModel(m, a.out);
    WriteTrainSidecar(a.out, rc, m, h, a.dataset);
  };
  const auto result = Train(ds, rc.train, std::move(model), CheckpointFn<float>(checkpoint));
  checkpoint(result.model, result.history);
  std::cout << "steps " << result.model.step << "\n";
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "loss " << FormatFloat(last.total) << "\n";
  }
}

// -------------------------------------------------------------- segment

struct SegmentArgs {
  fs::path model, frame, dataset, text, labels, out;
};

void RunSegment(const SegmentArgs& a) {
  const auto model = LoadModel<float>(a.model);
  Matrix<float> text;
  std::vector<std::string> labels;
  if (!a.dataset.empty()) {
    const SceneDataset ds = ReadDataset(a.dataset);
    text = ds.tables.text;
    labels = ds.tables.labels;
  } else {
    if (a.text.empty() || a.labels.empty()) {
      Fail(ErrorKind::kInvalidInput, "segment needs --dataset or both --text and --labels");
    }
    text = ReadEmbeddingTable(a.text);
    labels = ReadLabelList(a.labels);
    if (labels.size() != text.rows) {
      Fail(ErrorKind::kInvalidInput, "label list and text table sizes differ");
    }
  }
  const Frame frame = LoadFrame(a.frame);
  const LabelMap map = SegmentView(frame.depth, frame.pose, frame.intrinsics, text, model);
  WriteLabelRaster(a.out, map);
  Json legend = {{"unknown", 255}, {"labels", Json::array()}};
  std::vector<std::size_t> counts(labels.size(), 0);
  std::size_t unknown = 0;
  for (const auto id : map.ids) {
    if (id == kUnknownLabel) {
      ++unknown;
    } else {
      ++counts[id];
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    legend["labels"].push_back({{"id", i}, {"name", labels[i]}, {"pixels", counts[i]}});
  }
  legend["unknown_pixels"] = unknown;
  fs::path legend_path = a.out;
  legend_path.replace_extension(".json");
  WriteJsonFile(legend_path, legend);
  std::cout << legend.dump() << "\n";
}

// ---------------------------------------------------------------- query

struct QueryArgs {
  fs::path model, embedding, dataset, out;
  std::optional<std::uint32_t> label_index;
  std::size_t k = 10;
  double spacing = 0.05;
  double semantic_weight = 0.5;
  std::uint64_t budget = kDefaultPointBudget;
};

QueryEmbedding ResolveQuery(const fs::path& embedding, const fs::path& dataset,
                            std::optional<std::uint32_t> label_index) {
  if (!embedding.empty()) return ReadQuery(embedding);
  if (!label_index || dataset.empty()) {
    Fail(ErrorKind::kInvalidInput, "query needs --embedding or --label-index with --dataset");
  }
  const SceneDataset ds = ReadDataset(dataset);
  if (*label_index >= ds.tables.text.rows) {
    Fail(ErrorKind::kBounds, "label index " + std::to_string(*label_index) + " out of range");
  }
  const auto row = ds.tables.text.Row(*label_index);
  return QueryEmbedding::Make(std::vector<float>(row.begin(), row.end()), std::nullopt,
                              "label " + std::to_string(*label_index));
}

void WritePoints(const fs::path& out, const std::vector<ScoredPoint>& points) {
  if (out.extension() == ".ply") {
    WriteHeatmapPly(out, points);
  } else {
    WriteScoredCsv(out, points);
  }
}

void PrintTop(const std::vector<ScoredPoint>& points) {
  std::cout << "points " << points.size() << "\n";
  if (!points.empty()) {
    const auto& p = points.front();
    std::cout << "top " << FormatFloat(p.point.x) << " " << FormatFloat(p.point.y) << " "
              << FormatFloat(p.point.z) << " " << FormatFloat(p.score) << "\n";
  }
}

void RunQuery(const QueryArgs& a) {
  const auto model = LoadModel<float>(a.model);
  const QueryEmbedding q = ResolveQuery(a.embedding, a.dataset, a.label_index);
  const CandidateGrid grid = BuildCandidateGrid(model, a.spacing, a.budget);
  const auto top = LocateQuery(q, grid, model, a.k, a.semantic_weight);
  if (!a.out.empty()) WritePoints(a.out, top);
  PrintTop(top);
}

// ------------------------------------------------------------- localize

struct LocalizeArgs {
  fs::path model, embedding, out;
  double threshold = 0.5;
  double spacing = 0.05;
  std::uint64_t budget = kDefaultPointBudget;
};

void RunLocalize(const LocalizeArgs& a) {
  const auto model = LoadModel<float>(a.model);
  const QueryEmbedding q = ReadQuery(a.embedding);
  if (!q.visual) Fail(ErrorKind::kInvalidInput, "localize needs a query with a visual part");
  const CandidateGrid grid = BuildCandidateGrid(model, a.spacing, a.budget);
  const auto points = LocalizeImage(*q.visual, grid, model, a.threshold);
  if (!a.out.empty()) WritePoints(a.out, points);
  PrintTop(points);
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  fs::path dataset, heldout, init, config, out_json, out_csv;
  std::vector<double> noise = {0.0, 0.2, 0.4};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

void RunEval(const EvalArgs& a) {
  const SceneDataset train = ReadDataset(a.dataset);
  const SceneDataset reference = a.heldout.empty() ? train : ReadDataset(a.heldout);
  RunConfig rc = ResolveRunConfig(a.config, train);
  if (!a.init.empty()) {
    // Architecture template; its weights are not used.
    rc.model = LoadModel<float>(a.init).Config();
  }
  const auto cells = NoiseSweep(train, reference, rc.model, rc.train, a.noise, a.seeds);

  Json j = {{"config", ToJson(rc)}, {"runs", Json::array()}, {"mean", Json::array()}};
  std::ofstream csv;
  if (!a.out_csv.empty()) {
    csv.open(a.out_csv, std::ios::trunc);
    if (!csv) Fail(ErrorKind::kIo, "cannot open " + a.out_csv.string() + " for writing");
    csv << "p";
    for (const auto s : a.seeds) csv << ",seed_" << s;
    csv << ",mean\n";
  }
  for (std::size_t pi = 0; pi < a.noise.size(); ++pi) {
    double sum = 0;
    if (csv.is_open()) csv << FormatFloat(a.noise[pi]);
    for (std::size_t si = 0; si < a.seeds.size(); ++si) {
      const auto& c = cells[pi * a.seeds.size() + si];
      j["runs"].push_back({{"p", c.p}, {"seed", c.seed}, {"accuracy", c.accuracy}});
      sum += c.accuracy;
      if (csv.is_open()) csv << ',' << FormatFloat(c.accuracy);
    }
    const double mean = sum / static_cast<double>(a.seeds.size());
    j["mean"].push_back({{"p", a.noise[pi]}, {"accuracy", mean}});
    if (csv.is_open()) csv << ',' << FormatFloat(mean) << '\n';
    std::cout << "p " << FormatFloat(a.noise[pi]) << " mean_accuracy " << FormatFloat(mean)
              << "\n";
  }
  if (!a.out_json.empty()) WriteJsonFile(a.out_json, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semfield: implicit 3D semantic fields from labeled RGB-D frames"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write the synthetic three-region fixture scene");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Scene seed");
  s->add_option("--frames", synth.frames, "Number of frames");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "Back-project detections into a .sfd dataset");
  p->add_option("--frames", prep.frames, "Frames directory")->required();
  p->add_option("--detections", prep.detections, "Detections JSON lines")->required();
  p->add_option("--labels", prep.labels, "Label list JSON")->required();
  p->add_option("--text", prep.text, "Text embedding table (.sfe)")->required();
  p->add_option("--image", prep.image, "Image embedding table (.sfe)")->required();
  p->add_option("--out", prep.out, "Output .sfd")->required();
  p->add_option("--min-confidence", prep.min_confidence, "Drop detections below this");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a field model");
  t->add_option("--dataset", train.dataset, "Input .sfd")->required();
  t->add_option("--out", train.out, "Output .sfm")->required();
  t->add_option("--config", train.config, "Run config JSON");
  t->add_option("--seed", train.seed);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--epochs", train.epochs);
  t->add_option("--steps", train.steps, "Cap on total steps");
  t->add_option("--lr", train.lr);
  t->add_option("--checkpoint-every", train.checkpoint_every);
  t->add_flag("--exclusive-denominator", train.exclusive);

  SegmentArgs seg;
  auto* g = app.add_subcommand("segment", "Label every valid pixel of a frame");
  g->add_option("--model", seg.model)->required();
  g->add_option("--frame", seg.frame, "Frame directory")->required();
  g->add_option("--dataset", seg.dataset, "Take labels from this .sfd");
  g->add_option("--text", seg.text, "Text embedding table (.sfe)");
  g->add_option("--labels", seg.labels, "Label list JSON");
  g->add_option("--out", seg.out, "Output label raster (.pgm)")->required();

  QueryArgs query;
  auto* q = app.add_subcommand("query", "Top-k lattice points for a query embedding");
  q->add_option("--model", query.model)->required();
  q->add_option("--embedding", query.embedding, "Query file (.sfq)");
  q->add_option("--label-index", query.label_index, "Row of the dataset text table");
  q->add_option("--dataset", query.dataset);
  q->add_option("--k", query.k);
  q->add_option("--spacing", query.spacing);
  q->add_option("--semantic-weight", query.semantic_weight);
  q->add_option("--budget", query.budget, "Maximum lattice points");
  q->add_option("--out", query.out, "Output .csv or .ply");

  LocalizeArgs loc;
  auto* l = app.add_subcommand("localize", "Lattice points matching an image embedding");
  l->add_option("--model", loc.model)->required();
  l->add_option("--embedding", loc.embedding, "Query file with a visual part")->required();
  l->add_option("--threshold", loc.threshold);
  l->add_option("--spacing", loc.spacing);
  l->add_option("--budget", loc.budget, "Maximum lattice points");
  l->add_option("--out", loc.out, "Output .csv or .ply");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Label-noise sweep: train per (p, seed), score accuracy");
  e->add_option("--dataset", eval.dataset, "Training .sfd")->required();
  e->add_option("--heldout", eval.heldout, "Reference .sfd (default: the training set)");
  e->add_option("--init", eval.init, "Model whose architecture is reused");
  e->add_option("--config", eval.config, "Run config JSON");
  e->add_option("--noise-p", eval.noise)->delimiter(',');
  e->add_option("--seeds", eval.seeds)->delimiter(',');
  e->add_option("--out", eval.out_json, "Metrics JSON");
  e->add_option("--csv", eval.out_csv, "Metrics CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*s) RunSynth(synth);
    if (*p) RunPrepare(prep);
    if (*t) RunTrain(train);
    if (*g) RunSegment(seg);
    if (*q) RunQuery(query);
    if (*l) RunLocalize(loc);
    if (*e) RunEval(eval);
  } catch (const Error& err) {
    std::fprintf(stderr, "semfield: error[%s]: %s\n", std::string(ErrorKindName(err.kind())).c_str(),
                 err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "semfield: error[internal]: %s\n", err.what());
    return 2;
  }
  return 0;
}
