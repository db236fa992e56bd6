#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pcnarx/errors.hpp"
#include "pcnarx/pc_narx.hpp"
#include "pcnarx/rng.hpp"

using namespace pcnarx;

namespace {

const InputModel kInput({"a", "b"}, {Marginal::uniform(-1.0, 1.0), Marginal::uniform(-1.0, 1.0)});

// Exact coefficient laws of the synthetic system y(t) = a y(t-1) + b x(t).
double coef_a(const Eigen::VectorXd& xi) { return 0.5 + 0.2 * xi[0]; }
double coef_b(const Eigen::VectorXd& xi) { return 0.3 + 0.1 * xi[0] * xi[1]; }

Eigen::VectorXd random_input(std::size_t T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(static_cast<Eigen::Index>(T));
  for (auto& v : x) v = u(rng);
  return x;
}

Eigen::VectorXd simulate(const Eigen::VectorXd& xi, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index t = 1; t < x.size(); ++t) y[t] = coef_a(xi) * y[t - 1] + coef_b(xi) * x[t];
  return y;
}

std::vector<Experiment> campaign(const Eigen::MatrixXd& X, std::uint64_t seed, std::size_t T = 150) {
  std::vector<Experiment> out;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    auto rng = run_stream(seed, static_cast<std::size_t>(i));
    Experiment e;
    e.xi = X.row(i).transpose();
    e.x = random_input(T, rng);
    e.y = simulate(e.xi, e.x);
    e.dt = 0.01;
    out.push_back(std::move(e));
  }
  return out;
}

NarxDictionary dictionary() {
  NarxDictionary d;
  d.terms = {NarxTerm::constant(), NarxTerm::make(0, 0, 1, 1), NarxTerm::make(1, 0, 0, 0), NarxTerm::make(1, 1, 0, 0),
             NarxTerm::make(0, 0, 2, 1)};
  d.n_x = 1;
  d.n_y = 1;
  return d;
}

PcNarxSettings settings(DegreeSelection mode) {
  PcNarxSettings s;
  s.rule.threshold = 0.0;
  s.rule.min_selected = 1;
  s.pce.p_max = 6;
  s.degree_selection = mode;
  return s;
}

struct Fixture {
  std::vector<Experiment> ed;
  PcNarxFit fit;
  Fixture(DegreeSelection mode) {
    std::mt19937_64 rng(3);
    ed = campaign(kInput.sample_lhs(30, rng), 100);
    fit = fit_pc_narx(ed, dictionary(), kInput, settings(mode));
  }
};

std::size_t term_position(const NarxStructure& s, const NarxTerm& t) {
  return static_cast<std::size_t>(std::find(s.terms.begin(), s.terms.end(), t) - s.terms.begin());
}

}  // namespace

TEST_CASE("closed-loop synthetic ED: coefficients are recovered as exact polynomials") {
  for (auto mode : {DegreeSelection::loo, DegreeSelection::cross_validation}) {
    CAPTURE(to_string(mode));
    const Fixture f(mode);
    const auto& m = f.fit.model;
    REQUIRE(m.structure().size() == 2);
    const std::size_t ia = term_position(m.structure(), NarxTerm::make(0, 0, 1, 1));
    const std::size_t ib = term_position(m.structure(), NarxTerm::make(1, 0, 0, 0));
    REQUIRE(ia < 2);
    REQUIRE(ib < 2);
    CHECK(f.fit.selection.model.qualified);
    for (const auto& pce : m.coefficient_pces()) CHECK(pce.loo() < 1e-10);

    // coefficient PCEs at fresh points against the generating laws
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd P = kInput.sample_mc(50, rng);
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      const Eigen::VectorXd xi = P.row(i).transpose();
      const Eigen::VectorXd c = m.coefficients(xi);
      CHECK(c[static_cast<Eigen::Index>(ia)] == doctest::Approx(coef_a(xi)).epsilon(1e-9));
      CHECK(c[static_cast<Eigen::Index>(ib)] == doctest::Approx(coef_b(xi)).epsilon(1e-9));
    }
    if (mode == DegreeSelection::cross_validation) {
      const auto& sw = f.fit.degree_sweep;
      CHECK(sw.degree >= 2);
      CHECK(sw.degrees.size() == sw.errors.size());
      CHECK(sw.degrees.front() == 1);
      CHECK(sw.errors.front() > 1e-6);  // degree 1 cannot represent a * b
      CHECK(std::is_sorted(sw.degrees.begin(), sw.degrees.end()));
    } else {
      CHECK(f.fit.degree_sweep.degrees.empty());
    }
  }
}

TEST_CASE("predictions") {
  const Fixture f(DegreeSelection::cross_validation);
  const auto& m = f.fit.model;
  // ED point with its own excitation reproduces the record
  for (std::size_t k : {0, 7, 29}) {
    const auto& e = f.ed[k];
    CHECK(relative_error(e.y, m.predict(e.xi, e.x)) < 1e-16);
  }
  // no constant term, zero input, zero state: stays at zero
  CHECK(m.predict(f.ed[0].xi, Eigen::VectorXd::Zero(100)).cwiseAbs().maxCoeff() == 0.0);
  // continuity in xi
  const Eigen::VectorXd u = kInput.to_standard(f.ed[3].xi);
  const Eigen::VectorXd y0 = m.predict(f.ed[3].xi, f.ed[3].x);
  const Eigen::VectorXd y1 = m.predict(kInput.from_standard(u.array() + 1e-8), f.ed[3].x);
  CHECK((y1 - y0).norm() < 1e-4 * y0.norm());
  Eigen::VectorXd outside(2);
  outside << 2.0, 0.0;
  CHECK_THROWS_AS(m.predict(outside, f.ed[0].x), DomainError);
}

TEST_CASE("validation report bookkeeping") {
  const Fixture f(DegreeSelection::cross_validation);
  std::mt19937_64 rng(9);
  const auto val = campaign(kInput.sample_mc(40, rng), 200);
  const ValidationReport r = validate(f.fit.model, val, 1, true);
  CHECK(r.errors.size() == 40);
  CHECK(r.errors.maxCoeff() < 1e-16);
  CHECK(r.mean_error == doctest::Approx(r.errors.mean()));
  CHECK(r.unstable == 0);
  CHECK(r.above_threshold == 0);
  CHECK(r.predictions.size() == 40);

  // mean predictor: every error is exactly 1
  std::vector<Eigen::VectorXd> flat;
  for (const auto& e : val) flat.push_back(Eigen::VectorXd::Constant(e.y.size(), e.y.mean()));
  const ValidationReport fl = compare_predictions(val, flat);
  for (Eigen::Index i = 0; i < fl.errors.size(); ++i) CHECK(fl.errors[i] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fl.above_threshold == 40);
  CHECK(fl.fraction_above == 1.0);

  // a diverged run is recorded, not dropped
  std::vector<Eigen::VectorXd> one_bad = flat;
  one_bad[5] = Eigen::VectorXd::Constant(val[5].y.size(), std::numeric_limits<double>::infinity());
  const ValidationReport b = compare_predictions(val, one_bad);
  CHECK(b.unstable == 1);
  CHECK(std::isinf(b.errors[5]));
  CHECK(b.mean_error == doctest::Approx(1.0));
}

TEST_CASE("Monte Carlo statistics") {
  const Fixture f(DegreeSelection::cross_validation);
  const ExcitationGenerator gen = [](const Eigen::VectorXd&, std::mt19937_64& rng) { return random_input(100, rng); };
  const McsStatistics a = mcs_statistics(f.fit.model, kInput, gen, 500, 4);
  const McsStatistics b = mcs_statistics(f.fit.model, kInput, gen, 500, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.density == b.density);
  CHECK(a.unstable == 0);
  CHECK_FALSE(a.warning);

  // larger ensembles agree within the Monte Carlo error
  const McsStatistics small = mcs_statistics(f.fit.model, kInput, gen, 10000, 11);
  const McsStatistics large = mcs_statistics(f.fit.model, kInput, gen, 100000, 12);
  int beyond3 = 0, beyond5 = 0;
  for (Eigen::Index t = 1; t < small.mean.size(); ++t) {
    const double se = large.std[t] * std::sqrt(1.0 / 10000 + 1.0 / 100000);
    const double d = std::abs(small.mean[t] - large.mean[t]);
    beyond3 += d > 3.0 * se;
    beyond5 += d > 5.0 * se;
  }
  CHECK(beyond3 <= 3);  // about 0.27 expected out of 99
  CHECK(beyond5 == 0);

  // coefficients that do not depend on xi and a fixed excitation: no spread
  const auto& m = f.fit.model;
  std::vector<PceModel> flat;
  for (const auto& p : m.coefficient_pces())
    flat.emplace_back(p.input_model(), p.basis(), std::vector<MultiIndex>{{0, 0}}, Eigen::VectorXd::Constant(1, p.mean()),
                      0.0, 0);
  const PcNarxModel frozen(m.structure(), flat, m.divergence_bound(), m.dt());
  const ExcitationGenerator fixed = [](const Eigen::VectorXd&, std::mt19937_64&) {
    std::mt19937_64 r(1);
    return random_input(80, r);
  };
  const McsStatistics z = mcs_statistics(frozen, kInput, fixed, 200, 1);
  CHECK(z.std.cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(mcs_statistics(m, kInput, gen, 10, 1), ArgumentError);
}

TEST_CASE("kernel density and trapezoid integral") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Eigen::VectorXd s(4000);
  for (auto& v : s) v = g(rng);
  const KernelDensity k = gaussian_kde(s, 512);
  const double dx = k.grid[1] - k.grid[0];
  CHECK(k.density.sum() * dx == doctest::Approx(1.0).epsilon(1e-3));
  std::vector<double> v(s.data(), s.data() + s.size());
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * (v.size() - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    return v[lo] + (pos - lo) * (v[lo + 1] - v[lo]);
  };
  const double sd = std::sqrt((s.array() - s.mean()).square().sum() / (s.size() - 1.0));
  CHECK(k.bandwidth == doctest::Approx(0.9 * std::min(sd, (q(0.75) - q(0.25)) / 1.34) * std::pow(4000.0, -0.2)));
  // density near the mode of a standard normal
  Eigen::Index mode = 0;
  k.density.maxCoeff(&mode);
  CHECK(k.density[mode] == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(0.05));

  const Eigen::VectorXd lin = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);  // v(t) = t on dt = 0.1
  const Eigen::VectorXd I = integrate_trapezoid(lin, 0.1);
  for (Eigen::Index i = 0; i < 11; ++i) CHECK(I[i] == doctest::Approx(0.5 * lin[i] * lin[i]).epsilon(1e-12));
  CHECK(I[0] == 0.0);
  CHECK(scalar_relative_error(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 4)) == doctest::Approx(0.5));
}

TEST_CASE("serialization and determinism") {
  const Fixture a(DegreeSelection::cross_validation), b(DegreeSelection::cross_validation);
  const std::string ja = to_json(a.fit.model).dump(), jb = to_json(b.fit.model).dump();
  CHECK(ja == jb);
  const PcNarxModel back = pc_narx_from_json(to_json(a.fit.model));
  CHECK(back.structure() == a.fit.model.structure());
  const auto& e = a.ed[4];
  CHECK(back.predict(e.xi, e.x) == a.fit.model.predict(e.xi, e.x));
  CHECK(to_json(back).dump() == ja);
  CHECK(degree_selection_from_string("cv") == DegreeSelection::cross_validation);
  CHECK(degree_selection_from_string("loo") == DegreeSelection::loo);
  CHECK_THROWS_AS(degree_selection_from_string("aic"), ArgumentError);
}

TEST_CASE("phase 2 alone on fixed coefficients") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd X = kInput.sample_lhs(25, rng);
  const auto ed = campaign(X, 300);
  const auto d = dictionary();
  const NarxStructure s = NarxStructure::from_dictionary(d, {1, 2});
  const CandidateEvaluation ev = evaluate_candidate(s, ed, 1e6);
  PceSettings ps;
  ps.p_max = 4;
  const DegreeSweep sw = select_common_degree(s, ed, ev.coefficients, kInput, ps, 5, 1e6);
  CHECK(sw.degree >= 2);
  CHECK(sw.unstable.size() == sw.degrees.size());
  ps.p_min = ps.p_max = sw.degree;
  const PcNarxModel m = fit_coefficient_pces(s, X, ev.coefficients, kInput, ps, 1e6, 0.01);
  for (Eigen::Index k = 0; k < X.rows(); ++k) {
    const Eigen::VectorXd c = m.coefficients(X.row(k).transpose());
    CHECK((c - ev.coefficients.row(k).transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(select_common_degree(s, ed, ev.coefficients, kInput, ps, 1, 1e6), ArgumentError);
}
