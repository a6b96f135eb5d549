#include <cmath>
#include <algorithm>
#include <array>
#include <random>
#include <set>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "trajscene/ablation.hpp"
#include "trajscene/error.hpp"
#include "trajscene/metrics.hpp"
#include "trajscene/mlp.hpp"

using namespace trajscene;
using doctest::Approx;

namespace {

Eigen::MatrixXd random_batch(int dim, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(dim, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < dim; ++r) x(r, c) = g(rng);
  }
  return x;
}

/// Two well-separated Gaussian clusters labeled bike and subway.
std::vector<LabeledVector> two_clusters(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<LabeledVector> out;
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool second = i % 2 == 1;
    LabeledVector v;
    v.id = "p" + std::to_string(i);
    v.label = second ? ModeLabel::subway : ModeLabel::bike;
    for (int d = 0; d < 6; ++d) v.x.push_back((second ? 3.0 : -3.0) * (d % 2 == 0 ? 1 : -1) + noise(rng));
    out.push_back(std::move(v));
  }
  return out;
}

/// Five noisy clusters, one per mode, with `dim` features.
std::vector<LabeledVector> five_clusters(int per_class, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.4);
  std::vector<LabeledVector> out;
  for (int i = 0; i < per_class * 5; ++i) {
    LabeledVector v;
    v.id = "q" + std::to_string(i);
    v.label = kAllModes[static_cast<std::size_t>(i % 5)];
    for (int d = 0; d < dim; ++d) v.x.push_back((d % 5 == i % 5 ? 2.0 : 0.0) + noise(rng));
    out.push_back(std::move(v));
  }
  return out;
}

SceneEmbedding record(const LabeledVector& v, CombineRule rule) {
  SceneEmbedding e;
  e.segment_id = v.id;
  e.combined = v.x;
  e.mode_label = v.label;
  e.combine_rule = rule;
  e.embedder_id = "test";
  return e;
}

}  // namespace

TEST_CASE("forward pass") {
  const MlpModel zero = MlpModel::zeros({7, 4, 5});
  const auto p = forward(zero, Eigen::VectorXd::Random(7));
  for (int i = 0; i < 5; ++i) CHECK(p(i) == Approx(0.2).epsilon(1e-15));

  MlpModel eye = MlpModel::zeros({5, 5});
  eye.weights[0] = 3.0 * Eigen::MatrixXd::Identity(5, 5);
  for (int hot = 0; hot < 5; ++hot) {
    const auto q = forward(eye, Eigen::VectorXd::Unit(5, hot));
    Eigen::Index arg = 0;
    q.maxCoeff(&arg);
    CHECK(arg == hot);
    CHECK(q(hot) == Approx(std::exp(3.0) / (std::exp(3.0) + 4.0)).epsilon(1e-12));
  }

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpModel m = MlpModel::initialize({9, 6, 4, 5}, 100 + trial);
    const Eigen::MatrixXd x = random_batch(9, 1, rng);
    const Eigen::VectorXd probs = forward(m, x.col(0));
    CHECK(probs.sum() == Approx(1.0).epsilon(1e-9));
    CHECK(probs.minCoeff() >= 0.0);

    MlpModel shifted = m;
    shifted.biases.back().array() += 7.5;
    const Eigen::VectorXd sp = forward(shifted, x.col(0));
    CHECK((sp - probs).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(forward(zero, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("gradient check on random small models") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<int> dims = trial % 2 ? std::vector<int>{4, 6, 5} : std::vector<int>{3, 5, 4, 5};
    const MlpModel m = MlpModel::initialize(dims, 1000 + trial);
    const Eigen::MatrixXd x = random_batch(dims.front(), 8, rng);
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i) labels.push_back(static_cast<int>(rng() % 5));
    CHECK(gradient_check(m, x, labels, 0.0) < 1e-4);
    CHECK(gradient_check(m, x, labels, 1e-2) < 1e-4);
  }
}

TEST_CASE("gradient special cases") {
  const MlpModel m = MlpModel::initialize({4, 6, 5}, 3);
  Gradients g;
  loss_and_gradients(m, Eigen::MatrixXd::Zero(4, 3), {0, 1, 2}, 0.0, &g);
  CHECK(g.weights[0].cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(8);
  const Eigen::MatrixXd one = random_batch(4, 1, rng);
  Eigen::MatrixXd dup(4, 4);
  for (int c = 0; c < 4; ++c) dup.col(c) = one.col(0);
  Gradients g1, g4;
  const double l1 = loss_and_gradients(m, one, {3}, 0.0, &g1);
  const double l4 = loss_and_gradients(m, dup, {3, 3, 3, 3}, 0.0, &g4);
  CHECK(l4 == Approx(l1).epsilon(1e-12));
  for (std::size_t l = 0; l < g1.weights.size(); ++l) {
    CHECK((g1.weights[l] - g4.weights[l]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g1.biases[l] - g4.biases[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("training separates two clusters and is deterministic") {
  const auto data = two_clusters(60, 5);
  TrainConfig cfg;
  cfg.hidden_dims = {16};
  cfg.epochs = 50;
  const auto a = train(data, {}, cfg);
  int correct = 0;
  for (const auto& s : data) correct += predict(a.model, s.x) == static_cast<int>(s.label);
  CHECK(static_cast<double>(correct) / static_cast<double>(data.size()) >= 0.99);

  const auto b = train(data, {}, cfg);
  REQUIRE(a.model.weights.size() == b.model.weights.size());
  for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
    CHECK(a.model.weights[l] == b.model.weights[l]);
    CHECK(a.model.biases[l] == b.model.biases[l]);
  }
  CHECK(serialize_model(a.model, cfg) == serialize_model(b.model, cfg));
}

TEST_CASE("training input errors") {
  auto data = two_clusters(10, 1);
  for (auto& s : data) s.label = ModeLabel::walk;
  CHECK_THROWS_AS(train(data, {}, {}), Error);
  auto mixed = two_clusters(10, 1);
  mixed[3].x.pop_back();
  CHECK_THROWS_AS(train(mixed, {}, {}), Error);
  TrainConfig bad;
  bad.test_frac = 0.3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  const auto data = five_clusters(20, 10, 3);
  TrainConfig cfg;
  cfg.hidden_dims = {8};
  cfg.epochs = 5;
  const auto r = train(data, {}, cfg);
  const std::string text = serialize_model(r.model, cfg);
  TrainConfig back_cfg;
  const MlpModel back = deserialize_model(text, &back_cfg);
  CHECK(back.layer_dims == r.model.layer_dims);
  CHECK(back_cfg.hidden_dims == cfg.hidden_dims);
  CHECK(serialize_model(back, back_cfg) == text);
  for (const auto& s : data) CHECK(predict(back, s.x) == predict(r.model, s.x));

  auto j = nlohmann::json::parse(text);
  j["version"] = 99;
  CHECK_THROWS_AS(deserialize_model(j.dump()), IntegrityError);
  CHECK_THROWS_AS(deserialize_model("{}"), IntegrityError);
}

TEST_CASE("stratified split") {
  const auto data = five_clusters(20, 4, 9);
  TrainConfig cfg;
  const DataSplit s = stratified_split(data, cfg);
  CHECK(s.train.size() + s.val.size() + s.test.size() == data.size());
  CHECK(s.test.size() == 20);
  CHECK(s.val.size() == 10);
  std::array<int, 5> per_class{};
  for (auto i : s.test) ++per_class[static_cast<std::size_t>(data[i].label)];
  for (int n : per_class) CHECK(n == 4);

  auto shuffled = data;
  std::mt19937_64 rng(4);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const DataSplit t = stratified_split(shuffled, cfg);
  std::set<std::string> a, b;
  for (auto i : s.test) a.insert(data[i].id);
  for (auto i : t.test) b.insert(shuffled[i].id);
  CHECK(a == b);

  auto dup = data;
  dup[1].id = dup[0].id;
  CHECK_THROWS_AS(stratified_split(dup, cfg), Error);
}

TEST_CASE("metrics on the toy confusion") {
  Confusion c{};
  c[0] = {2, 0, 0, 0, 0};
  c[1] = {1, 1, 0, 0, 0};
  c[2] = {0, 0, 2, 0, 0};
  const EvalReport r = evaluate_confusion(c);
  CHECK(r.accuracy == 5.0 / 6.0);
  CHECK(r.total == 6);
  CHECK(r.per_class[0].precision == 2.0 / 3.0);
  CHECK(r.per_class[0].recall == 1.0);
  CHECK(r.per_class[1].precision == 1.0);
  CHECK(r.per_class[1].recall == 0.5);
  CHECK(r.per_class[2].precision == 1.0);
  CHECK(r.per_class[2].recall == 1.0);
  CHECK(r.per_class[0].f1 == Approx(0.8).epsilon(1e-15));
  CHECK(r.per_class[1].f1 == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.absent_classes == std::vector<ModeLabel>{ModeLabel::car, ModeLabel::subway});
  CHECK(r.macro_precision == Approx(8.0 / 9.0).epsilon(1e-15));
  CHECK(r.macro_recall == Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(r.macro_f1 == Approx((0.8 + 2.0 / 3.0 + 1.0) / 3.0).epsilon(1e-15));
  CHECK(r.per_class[0].support == 2);

  const auto j = to_json(r);
  CHECK(j.at("confusion").size() == 5);
  const std::string table = format_table({{"toy", r}});
  CHECK(table.find("Acc (%)") != std::string::npos);
  CHECK(table.find("83.3") != std::string::npos);
}

TEST_CASE("metrics edge cases") {
  std::vector<int> truth, pred;
  for (int c = 0; c < 5; ++c) {
    for (int k = 0; k < 4; ++k) {
      truth.push_back(c);
      pred.push_back(0);
    }
  }
  const auto lazy = evaluate_predictions(truth, pred);
  CHECK(lazy.accuracy == Approx(0.2).epsilon(1e-15));
  CHECK(lazy.macro_precision == Approx(0.04).epsilon(1e-15));
  CHECK(lazy.absent_classes.empty());

  const auto perfect = evaluate_predictions(truth, truth);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK_THROWS_AS(evaluate_confusion(Confusion{}), Error);
  CHECK_THROWS_AS(evaluate_predictions({0}, {7}), Error);
}

TEST_CASE("ablation harness") {
  const auto data = five_clusters(20, 8, 21);
  EmbeddingStore store;
  for (CombineRule rule : kAllRules) {
    for (const auto& v : data) {
      LabeledVector w = v;
      if (rule == CombineRule::concatenation) w.x.insert(w.x.end(), v.x.begin(), v.x.end());
      store[rule].push_back(record(w, rule));
    }
  }
  TrainConfig cfg;
  cfg.hidden_dims = {8};
  cfg.epochs = 10;
  const auto rows = run_ablation(store, cfg);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.test_ids == rows.front().test_ids);
    long trace = 0;
    for (std::size_t i = 0; i < kModeCount; ++i) trace += r.report.confusion[i][i];
    CHECK(r.report.accuracy == static_cast<double>(trace) / static_cast<double>(r.report.total));
    CHECK(r.input_dim == (r.rule == CombineRule::concatenation ? 16u : 8u));
  }
  CHECK(to_json(rows).size() == 4);
  CHECK(format_ablation_table(rows).find("Ours(concatenation) [d=16]") != std::string::npos);

  auto missing = store;
  missing[CombineRule::fusion].pop_back();
  try {
    run_ablation(missing, cfg);
    FAIL("expected an alignment error");
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find(data.back().id) != std::string::npos);
  }
  auto no_variant = store;
  no_variant.erase(CombineRule::text_only);
  CHECK_THROWS_AS(run_ablation(no_variant, cfg), IntegrityError);
  CHECK_THROWS_AS(to_dataset({record(data[0], CombineRule::fusion), record(data[1], CombineRule::text_only)}),
                  Error);
}
