#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "trialkit/errors.hpp"
#include "trialkit/model.hpp"
#include "trialkit/rng.hpp"

using namespace trialkit;

namespace {

StateVector random_state(Rng& rng) {
  StateVector s;
  s.bias = 1.0;
  s.time_of_day = rng.bernoulli(0.5) ? 1.0 : 0.0;
  s.b_bar = rng.uniform();
  s.a_bar = rng.uniform();
  s.app_engagement = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return s;
}

TrainingTuple random_tuple(Rng& rng, int t) {
  TrainingTuple tup;
  tup.participant_id = "p001";
  tup.decision_index = t;
  tup.state = random_state(rng);
  tup.pi = 0.2 + 0.6 * rng.uniform();
  tup.action = rng.bernoulli(tup.pi) ? 1 : 0;
  tup.reward = rng.normal(0.0, 2.0);
  tup.complete = true;
  return tup;
}

Mat5 random_spd(Rng& rng) {
  Mat5 a;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = rng.normal();
  return (a.transpose() * a / 5.0 + 0.3 * Mat5::Identity()).eval();
}

// Reference conjugate solve using a plain dense inverse, no shared code with
// the production path beyond design-row construction.
void dense_oracle(const Vec15& mu0, const Mat15& sigma0, double noise_var,
                  const std::vector<TrainingTuple>& batch, Vec15& mu_out, Mat15& sigma_out) {
  const Mat15 prior_prec = sigma0.inverse();
  Mat15 prec = prior_prec;
  Vec15 rhs = prior_prec * mu0;
  for (const TrainingTuple& tup : batch) {
    const Vec15 row = build_design_row(tup.state, tup.pi, tup.action);
    prec += row * row.transpose() / noise_var;
    rhs += row * tup.reward / noise_var;
  }
  sigma_out = prec.inverse();
  mu_out = sigma_out * rhs;
}

bool bit_equal(const Vec15& a, const Vec15& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * 15) == 0;
}

bool bit_equal(const Mat15& a, const Mat15& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * 225) == 0;
}

}  // namespace

TEST_CASE("design row matches direct substitution") {
  StateVector s;  // (1,0,0,0,0)
  Vec15 row = build_design_row(s, 0.5, 1);
  Vec15 want;
  want << 1, 0, 0, 0, 0, 0.5, 0, 0, 0, 0, 0.5, 0, 0, 0, 0;
  CHECK((row - want).cwiseAbs().maxCoeff() == 0.0);

  s.time_of_day = 1.0;
  row = build_design_row(s, 0.5, 0);
  const Vec5 f = s.to_vector();
  CHECK((row.segment<5>(5) - 0.5 * f).cwiseAbs().maxCoeff() == 0.0);
  CHECK((row.segment<5>(10) + 0.5 * f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("design row inner product equals the termwise linear model") {
  Rng rng(911);
  for (int rep = 0; rep < 200; ++rep) {
    const StateVector s = random_state(rng);
    const double pi = rng.uniform();
    const int action = rng.bernoulli(0.5) ? 1 : 0;
    Vec15 theta;
    for (int i = 0; i < 15; ++i) theta(i) = rng.normal();
    const Vec5 f = s.to_vector();
    const double termwise = f.dot(theta.segment<5>(0)) + pi * f.dot(theta.segment<5>(5)) +
                            (action - pi) * f.dot(theta.segment<5>(10));
    CHECK(build_design_row(s, pi, action).dot(theta) == doctest::Approx(termwise).epsilon(1e-12));
  }
}

TEST_CASE("design row rejects out-of-domain inputs") {
  StateVector s;
  CHECK_THROWS_AS(build_design_row(s, 1.1, 1), InvalidInput);
  CHECK_THROWS_AS(build_design_row(s, -0.1, 0), InvalidInput);
  CHECK_THROWS_AS(build_design_row(s, 0.5, 2), InvalidInput);
  CHECK_THROWS_AS(build_design_row(s, 0.5, -1), InvalidInput);

  StateVector bad = s;
  bad.b_bar = std::nan("");
  CHECK_THROWS_AS(build_design_row(bad, 0.5, 1), InvalidInput);
  bad = s;
  bad.bias = 2.0;
  CHECK_THROWS_AS(build_design_row(bad, 0.5, 1), InvalidInput);
  bad = s;
  bad.time_of_day = 0.5;
  CHECK_THROWS_AS(build_design_row(bad, 0.5, 1), InvalidInput);
  bad = s;
  bad.app_engagement = 0.25;
  CHECK_THROWS_AS(build_design_row(bad, 0.5, 1), InvalidInput);
  bad = s;
  bad.a_bar = 1.5;
  CHECK_THROWS_AS(build_design_row(bad, 0.5, 1), InvalidInput);
}

TEST_CASE("empty batch returns bit-identical prior moments with a version bump") {
  PriorSpec prior = PriorSpec::scaled_identity(2.5, 4.0);
  prior.mu_beta << 0.1, -0.2, 0.3, -0.4, 0.5;
  const PosteriorState post = posterior_update(prior, {}, 0);
  CHECK(post.update_index == 1);
  CHECK(post.version_id == "v1");
  CHECK(post.trained_on == 0);
  CHECK(bit_equal(post.mu, prior.stacked_mean()));
  CHECK(bit_equal(post.sigma, prior.stacked_cov()));

  // Repeated empty updates keep the moments stable while counting up.
  const PosteriorState again =
      posterior_update_from_moments(post.mu, post.sigma, 4.0, {}, post.update_index);
  CHECK(again.update_index == 2);
  CHECK(again.version_id == "v2");
  CHECK(bit_equal(again.mu, post.mu));
  CHECK(bit_equal(again.sigma, post.sigma));
}

TEST_CASE("near-infinite noise leaves the prior untouched") {
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1e12);
  Rng rng(7);
  const PosteriorState post = posterior_update(prior, {random_tuple(rng, 0)}, 0);
  CHECK((post.mu - prior.stacked_mean()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((post.sigma - prior.stacked_cov()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("single observation matches the rank-one closed form") {
  // Identity prior, zero mean, unit noise: Sigma = I - r r^T / (1 + r^T r),
  // mu = r y / (1 + r^T r).
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1.0);
  Rng rng(13);
  TrainingTuple tup = random_tuple(rng, 0);
  tup.reward = 1.75;
  const Vec15 r = build_design_row(tup.state, tup.pi, tup.action);
  const double denom = 1.0 + r.squaredNorm();
  const Mat15 sigma_want = Mat15::Identity() - r * r.transpose() / denom;
  const Vec15 mu_want = r * tup.reward / denom;

  const PosteriorState post = posterior_update(prior, {tup}, 3);
  CHECK(post.update_index == 4);
  CHECK(post.version_id == "v4");
  CHECK(post.trained_on == 1);
  CHECK((post.mu - mu_want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((post.sigma - sigma_want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random batches match an independent dense normal-equations solve") {
  Rng rng(0xABCDEF);
  for (int rep = 0; rep < 50; ++rep) {
    PriorSpec prior;
    prior.sigma_alpha0 = random_spd(rng);
    prior.sigma_alpha1 = random_spd(rng);
    prior.sigma_beta = random_spd(rng);
    for (int i = 0; i < 5; ++i) {
      prior.mu_alpha0(i) = rng.normal();
      prior.mu_alpha1(i) = rng.normal();
      prior.mu_beta(i) = rng.normal();
    }
    prior.noise_var = 0.5 + 2.0 * rng.uniform();

    const int n = 1 + rng.index(20);
    std::vector<TrainingTuple> batch;
    for (int t = 0; t < n; ++t) batch.push_back(random_tuple(rng, t));

    Vec15 mu_want;
    Mat15 sigma_want;
    dense_oracle(prior.stacked_mean(), prior.stacked_cov(), prior.noise_var, batch, mu_want,
                 sigma_want);

    const PosteriorState post = posterior_update(prior, batch, rep);
    CHECK((post.mu - mu_want).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((post.sigma - sigma_want).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(post.trained_on == static_cast<std::size_t>(n));
  }
}

TEST_CASE("posterior covariance contracts as data accumulates") {
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1.0);
  Rng rng(21);
  std::vector<TrainingTuple> batch;
  double prev_trace = prior.stacked_cov().trace();
  for (int t = 0; t < 12; ++t) {
    batch.push_back(random_tuple(rng, t));
    const PosteriorState post = posterior_update(prior, batch, 0);
    const double tr = post.sigma.trace();
    CHECK(tr <= prev_trace + 1e-12);
    prev_trace = tr;
  }
}

TEST_CASE("posterior is invariant to batch order") {
  PriorSpec prior = PriorSpec::scaled_identity(1.3, 0.8);
  Rng rng(55);
  std::vector<TrainingTuple> batch;
  for (int t = 0; t < 15; ++t) batch.push_back(random_tuple(rng, t));
  std::vector<TrainingTuple> reversed(batch.rbegin(), batch.rend());

  const PosteriorState a = posterior_update(prior, batch, 0);
  const PosteriorState b = posterior_update(prior, reversed, 0);
  CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("incremental updates equal one joint update") {
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1.5);
  Rng rng(99);
  std::vector<TrainingTuple> first, second, joint;
  for (int t = 0; t < 8; ++t) first.push_back(random_tuple(rng, t));
  for (int t = 8; t < 20; ++t) second.push_back(random_tuple(rng, t));
  joint = first;
  joint.insert(joint.end(), second.begin(), second.end());

  const PosteriorState mid = posterior_update(prior, first, 0);
  const PosteriorState chained =
      posterior_update_from_moments(mid.mu, mid.sigma, prior.noise_var, second, mid.update_index);
  const PosteriorState once = posterior_update(prior, joint, 1);

  CHECK(chained.update_index == once.update_index);
  CHECK((chained.mu - once.mu).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((chained.sigma - once.sigma).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("prediction with a matching pi and action ignores the advantage block") {
  Rng rng(31);
  PosteriorState post;
  for (int i = 0; i < 15; ++i) post.mu(i) = rng.normal();
  const StateVector s = random_state(rng);

  // pi == action makes the centered term vanish, so beta perturbations are
  // invisible.
  const double base = predict_reward_mean(post, s, 1.0, 1);
  PosteriorState bumped = post;
  bumped.mu.segment<5>(10).array() += 17.0;
  CHECK(predict_reward_mean(bumped, s, 1.0, 1) == doctest::Approx(base).epsilon(1e-14));
  CHECK(predict_reward_mean(bumped, s, 0.0, 0) ==
        doctest::Approx(predict_reward_mean(post, s, 0.0, 0)).epsilon(1e-14));

  // The action gap at fixed pi is exactly the advantage mean.
  const double pi = 0.37;
  const double gap = predict_reward_mean(post, s, pi, 1) - predict_reward_mean(post, s, pi, 0);
  CHECK(gap == doctest::Approx(s.to_vector().dot(post.mu.segment<5>(10))).epsilon(1e-12));
}

TEST_CASE("predict_reward_mean is zero for a zero mean and termwise otherwise") {
  PosteriorState post;
  StateVector s;
  s.b_bar = 0.4;
  CHECK(predict_reward_mean(post, s, 0.6, 1) == 0.0);

  Rng rng(77);
  for (int i = 0; i < 15; ++i) post.mu(i) = rng.normal();
  const Vec5 f = s.to_vector();
  const double want = f.dot(post.mu.segment<5>(0)) + 0.6 * f.dot(post.mu.segment<5>(5)) +
                      0.4 * f.dot(post.mu.segment<5>(10));
  CHECK(predict_reward_mean(post, s, 0.6, 1) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("advantage marginal slices coordinates 10..14") {
  PosteriorState post;
  for (int i = 0; i < 15; ++i) post.mu(i) = i;
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j) post.sigma(i, j) = 100.0 * i + j;

  const BetaMarginal m = marginal_advantage_posterior(post);
  for (int i = 0; i < 5; ++i) {
    CHECK(m.mu(i) == 10 + i);
    for (int j = 0; j < 5; ++j) CHECK(m.sigma(i, j) == 100.0 * (10 + i) + (10 + j));
  }
}

TEST_CASE("prior-only posterior yields the prior beta marginal") {
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1.0);
  prior.mu_beta << 1, 2, 3, 4, 5;
  prior.sigma_beta = 0.25 * Mat5::Identity();
  const PosteriorState post = posterior_update(prior, {}, 0);
  const BetaMarginal m = marginal_advantage_posterior(post);
  CHECK((m.mu - prior.mu_beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m.sigma - prior.sigma_beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prior validation rejects malformed specs") {
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1.0);
  CHECK_NOTHROW(prior.validate());

  PriorSpec bad = prior;
  bad.noise_var = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad.noise_var = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), InvalidInput);

  bad = prior;
  bad.sigma_beta(0, 1) = 0.9;  // asymmetric
  CHECK_THROWS_AS(bad.validate(), InvalidInput);

  bad = prior;
  bad.sigma_alpha1 = -Mat5::Identity();
  CHECK_THROWS_AS(bad.validate(), InvalidInput);

  bad = prior;
  bad.mu_alpha0(2) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("update rejects incomplete tuples and bad rewards") {
  PriorSpec prior = PriorSpec::scaled_identity(1.0, 1.0);
  Rng rng(3);
  TrainingTuple tup = random_tuple(rng, 0);
  tup.complete = false;
  CHECK_THROWS_AS(posterior_update(prior, {tup}, 0), InvalidInput);

  tup.complete = true;
  tup.reward = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(posterior_update(prior, {tup}, 0), InvalidInput);
}

TEST_CASE("degenerate prior covariance raises a numerical failure") {
  Rng rng(5);
  const TrainingTuple tup = random_tuple(rng, 0);
  CHECK_THROWS_AS(
      posterior_update_from_moments(Vec15::Zero(), Mat15::Zero(), 1.0, {tup}, 0),
      NumericalFailure);
}
