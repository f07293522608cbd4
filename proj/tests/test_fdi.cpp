#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "apufdi/errors.hpp"
#include "apufdi/fdi.hpp"
#include "apufdi/scenario.hpp"
#include "test_support.hpp"

using namespace apufdi;
namespace ts = testing_support;

namespace {

HealthClass classify_all(const std::vector<double>& v) {
  return classify(v, StepWindow{0, v.size()});
}

}  // namespace

TEST(Classify, ConstantTrajectories) {
  EXPECT_EQ(classify_all(std::vector<double>(50, 1.0)), HealthClass::Healthy);
  EXPECT_EQ(classify_all(std::vector<double>(50, 0.95)), HealthClass::MediumFault);
  EXPECT_EQ(classify_all(std::vector<double>(50, 0.97)), HealthClass::MinorFault);
  EXPECT_EQ(classify_all(std::vector<double>(50, 0.93)), HealthClass::SevereFault);
}

TEST(Classify, BoundariesAreLowerInclusive) {
  EXPECT_EQ(classify_value(0.96), HealthClass::MinorFault);
  EXPECT_EQ(classify_value(0.94), HealthClass::MediumFault);
  EXPECT_EQ(classify_value(0.98), HealthClass::Healthy);
  EXPECT_EQ(classify_value(0.5), HealthClass::SevereFault);
  EXPECT_EQ(classify_value(1.2), HealthClass::Healthy);
  const std::vector<double> v{0.95, 0.97};
  EXPECT_EQ(classify_all(v), HealthClass::MinorFault);
}

TEST(Classify, UsesOnlyTheWindow) {
  std::vector<double> v(100, 1.0);
  std::fill(v.begin() + 60, v.end(), 0.93);
  EXPECT_EQ(classify(v, StepWindow{60, 100}), HealthClass::SevereFault);
  EXPECT_EQ(classify(v, StepWindow{0, 60}), HealthClass::Healthy);
}

TEST(Classify, RejectsEmptyOrOutOfRangeWindow) {
  const std::vector<double> v(10, 1.0);
  EXPECT_THROW(classify(v, StepWindow{5, 5}), std::invalid_argument);
  EXPECT_THROW(classify(v, StepWindow{5, 11}), std::out_of_range);
}

TEST(Classify, IgnoresOrderWithinWindow) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.93, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(37);
    for (double& x : v) x = u(rng);
    const HealthClass before = classify_all(v);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(classify_all(v), before);
  }
}

TEST(Classify, TruthTrajectoriesGetTheirPlannedClass) {
  const ScenarioConfig cfg = ts::case_config(1);
  for (HealthClass c : kHealthClasses) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RunRecord r = simulate_run(cfg, c, seed);
      for (Eigen::Index j = 0; j < r.theta.cols(); ++j) {
        std::vector<double> th(r.steps());
        for (std::size_t k = 0; k < th.size(); ++k)
          th[k] = 1.0 + r.theta(static_cast<Eigen::Index>(k), j);
        EXPECT_EQ(classify(th, StepWindow{th.size() - cfg.window, th.size()}), c);
      }
    }
  }
}

TEST(Classify, HealthClassNames) {
  for (HealthClass c : kHealthClasses) EXPECT_EQ(parse_health_class(to_string(c)), c);
  EXPECT_THROW(parse_health_class("broken"), std::invalid_argument);
}

TEST(Rmse, Examples) {
  const std::vector<double> a{1, 2, 3, 4};
  EXPECT_EQ(rmse(a, a), 0.0);
  const std::vector<double> b{1.01, 2.01, 3.01, 4.01};
  EXPECT_NEAR(rmse(b, a), 0.01, 1e-12);
}

TEST(Rmse, MatchesNaiveComputation) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> e(500), t(500);
    for (std::size_t i = 0; i < e.size(); ++i) {
      e[i] = z(rng);
      t[i] = z(rng);
    }
    double sum = 0;
    for (std::size_t i = 0; i < e.size(); ++i) sum += (e[i] - t[i]) * (e[i] - t[i]);
    const double naive = std::sqrt(sum / static_cast<double>(e.size()));
    EXPECT_NEAR(rmse(e, t), naive, 1e-12 * naive);
  }
}

TEST(Rmse, RejectsBadLengths) {
  const std::vector<double> a{1, 2}, b{1}, none;
  EXPECT_THROW(rmse(a, b), DimensionError);
  EXPECT_THROW(rmse(none, none), std::invalid_argument);
}

TEST(Improvement, TableValues) {
  EXPECT_NEAR(improvement(121.8, 105.8), 13.13, 0.01);
  EXPECT_NEAR(improvement(3.207e-3, 2.417e-3), 24.63, 0.01);
  EXPECT_EQ(improvement(2.0, 2.0), 0.0);
  EXPECT_LT(improvement(1.0, 2.0), 0.0);
  EXPECT_THROW(improvement(0.0, 1.0), std::domain_error);
}

TEST(Confusion, AllCorrectGivesIdentityRates) {
  std::vector<HealthClass> labels;
  for (HealthClass c : kHealthClasses) labels.insert(labels.end(), 10, c);
  const ConfusionMatrix cm = confusion(labels, labels);
  EXPECT_EQ(cm.rates(), Eigen::Matrix4d::Identity());
  EXPECT_EQ(cm.total(), 40);
}

TEST(Confusion, ReproducesTableRow) {
  std::vector<HealthClass> actual(100, HealthClass::MediumFault);
  std::vector<HealthClass> predicted(13, HealthClass::MediumFault);
  predicted.insert(predicted.end(), 87, HealthClass::SevereFault);
  const Eigen::Matrix4d r = confusion(actual, predicted).rates();
  EXPECT_NEAR(r(2, 2), 0.13, 1e-15);
  EXPECT_NEAR(r(2, 3), 0.87, 1e-15);
  EXPECT_EQ(r(2, 0), 0.0);
  EXPECT_EQ(r(2, 1), 0.0);
  EXPECT_EQ(r.row(0).sum(), 0.0);
}

TEST(Confusion, MarginalsMatchTally) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<HealthClass> a(1000), p(1000);
  std::array<std::int64_t, 4> row{}, col{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<HealthClass>(pick(rng));
    p[i] = static_cast<HealthClass>(pick(rng));
    ++row[static_cast<std::size_t>(a[i])];
    ++col[static_cast<std::size_t>(p[i])];
  }
  const ConfusionMatrix cm = confusion(a, p);
  for (HealthClass c : kHealthClasses) {
    EXPECT_EQ(cm.row_total(c), row[static_cast<std::size_t>(c)]);
    EXPECT_EQ(cm.column_total(c), col[static_cast<std::size_t>(c)]);
  }
  ConfusionMatrix twice = cm;
  twice += cm;
  EXPECT_EQ(twice.total(), 2000);
  const std::vector<HealthClass> short_list(3, HealthClass::Healthy);
  EXPECT_THROW(confusion(a, short_list), DimensionError);
}

TEST(MacroMetrics, PerfectMatrix) {
  ConfusionMatrix cm;
  for (HealthClass c : kHealthClasses) cm.add(c, c, 7);
  const ClassificationMetrics m = macro_metrics(cm);
  EXPECT_EQ(m.macro_precision, 1.0);
  EXPECT_EQ(m.macro_recall, 1.0);
  EXPECT_EQ(m.macro_f1, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(MacroMetrics, SingleRepresentedClass) {
  ConfusionMatrix cm;
  cm.add(HealthClass::MinorFault, HealthClass::MinorFault, 6);
  cm.add(HealthClass::MinorFault, HealthClass::Healthy, 4);
  const ClassificationMetrics m = macro_metrics(cm);
  EXPECT_TRUE(m.represented[1]);
  EXPECT_FALSE(m.represented[0]);
  EXPECT_EQ(m.precision[1], 1.0);
  EXPECT_NEAR(m.recall[1], 0.6, 1e-15);
  EXPECT_NEAR(m.macro_f1, 2 * 0.6 / 1.6, 1e-15);
  EXPECT_NEAR(m.macro_recall, 0.6, 1e-15);
  EXPECT_EQ(m.precision[0], 0.0);
}

TEST(MacroMetrics, MatchesDirectFormula) {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> count(0, 40);
  for (int trial = 0; trial < 100; ++trial) {
    ConfusionMatrix cm;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) cm.counts(i, j) = count(rng);
    double p_sum = 0, r_sum = 0, f_sum = 0;
    int present = 0;
    for (int c = 0; c < 4; ++c) {
      const double tp = static_cast<double>(cm.counts(c, c));
      const double actual = static_cast<double>(cm.counts.row(c).sum());
      const double predicted = static_cast<double>(cm.counts.col(c).sum());
      if (actual == 0) continue;
      const double p = predicted > 0 ? tp / predicted : 0.0;
      const double r = tp / actual;
      const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
      p_sum += p;
      r_sum += r;
      f_sum += f;
      ++present;
    }
    const ClassificationMetrics m = macro_metrics(cm);
    EXPECT_NEAR(m.macro_precision, p_sum / present, 1e-12);
    EXPECT_NEAR(m.macro_recall, r_sum / present, 1e-12);
    EXPECT_NEAR(m.macro_f1, f_sum / present, 1e-12);
    EXPECT_NEAR(m.accuracy, static_cast<double>(cm.counts.trace()) / static_cast<double>(cm.total()), 1e-15);
  }
}

TEST(Intervals, PartitionAndSampling) {
  EXPECT_EQ(decision_interval(HealthClass::MediumFault).lower, 0.94);
  EXPECT_EQ(decision_interval(HealthClass::MediumFault).upper, 0.96);
  EXPECT_EQ(sampling_interval(HealthClass::SevereFault).lower, 0.92);
  EXPECT_EQ(sampling_interval(HealthClass::SevereFault).upper, 0.94);
  EXPECT_EQ(sampling_interval(HealthClass::Healthy).upper, 1.0);
  for (HealthClass c : kHealthClasses) {
    const ClassInterval s = sampling_interval(c);
    EXPECT_EQ(classify_value(s.lower), c);
    EXPECT_EQ(classify_value(0.5 * (s.lower + s.upper)), c);
  }
}
