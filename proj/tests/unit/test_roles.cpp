#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "roledyn/errors.hpp"
#include "roledyn/nmf.hpp"
#include "roledyn/nnls.hpp"
#include "roledyn/roles.hpp"

using namespace roledyn;

namespace {

double rel_residual(const Eigen::MatrixXd& V, const NmfResult& r) { return (V - r.G * r.F).norm() / V.norm(); }

}  // namespace

TEST_CASE("nnls agrees with passive-set enumeration") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index k = 1 + trial % 6;
    Eigen::MatrixXd A(12, k);
    Eigen::VectorXd b(12);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = gauss(rng);
    const Eigen::VectorXd x = nnls(A, b);
    const Eigen::VectorXd ref = oracle::nnls_enumerate(A, b);
    CHECK((x.array() >= 0).all());
    CHECK((A * x - b).squaredNorm() == doctest::Approx((A * ref - b).squaredNorm()).epsilon(1e-9));
    CHECK((x - ref).norm() < 1e-8 * (1 + ref.norm()));
  }
}

TEST_CASE("nnls: trivial cases") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  CHECK(nnls(A, Eigen::Vector3d(1, -2, 3)) == Eigen::Vector3d(1, 0, 3));
  CHECK(nnls(A, Eigen::Vector3d::Zero()) == Eigen::Vector3d::Zero());
}

TEST_CASE("nmf: rank-1 outer product is recovered") {
  Eigen::VectorXd g(5), f(4);
  g << 1, 2, 3, 4, 5;
  f << 0.5, 1, 0, 2;
  Eigen::MatrixXd V = g * f.transpose();
  NmfOptions o;
  o.max_iters = 2000;
  o.tol = 1e-14;
  auto res = nmf(V, 1, o);
  CHECK(rel_residual(V, res) < 1e-6);
}

TEST_CASE("nmf: zero matrix has zero objective") {
  auto res = nmf(Eigen::MatrixXd::Zero(4, 4), 1);
  CHECK(res.final_objective() == 0.0);
  CHECK(res.converged);
}

TEST_CASE("nmf: planted block factors") {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd G = oracle::block_memberships(30, 3, rng);
  Eigen::MatrixXd F = oracle::uniform(3, 8, rng);
  Eigen::MatrixXd V = G * F;
  NmfOptions o;
  o.max_iters = 5000;
  o.tol = 1e-12;
  double best = 1;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    o.seed = seed;
    best = std::min(best, rel_residual(V, nmf(V, 3, o)));
  }
  CHECK(best < 1e-3);
}

TEST_CASE("nmf: objective is non-increasing and factors stay non-negative") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd V = oracle::uniform(20, 9, rng);
    NmfOptions o;
    o.seed = static_cast<std::uint64_t>(trial + 1);
    auto res = nmf(V, 3, o);
    for (std::size_t i = 1; i < res.objective.size(); ++i) CHECK(res.objective[i] <= res.objective[i - 1] + 1e-12);
    CHECK((res.G.array() >= 0).all());
    CHECK((res.F.array() >= 0).all());
    CHECK(res.objective.size() == res.iterations + 1);
    CHECK(res.final_objective() == doctest::Approx(nmf_objective(V, res.G, res.F)));
  }
}

TEST_CASE("nmf: accelerated inner steps with an entry floor stay monotone") {
  std::mt19937_64 rng(10);
  Eigen::MatrixXd V = oracle::uniform(30, 4, rng) * oracle::uniform(4, 12, rng);
  NmfOptions o;
  o.max_iters = 3000;
  o.tol = 1e-14;
  o.inner_iters = 4;
  o.entry_floor = 1e-16;
  auto res = nmf(V, 4, o);
  for (std::size_t i = 1; i < res.objective.size(); ++i) CHECK(res.objective[i] <= res.objective[i - 1] + 1e-12);
  CHECK((res.G.array() >= 1e-16).all());
  CHECK((res.F.array() >= 1e-16).all());
  auto plain = nmf(V, 4, {3000, 1e-14, 1});
  CHECK(res.final_objective() <= plain.final_objective());
  o.inner_iters = 0;
  CHECK_THROWS_AS(nmf(V, 4, o), ArgumentError);
  o.inner_iters = 1;
  o.entry_floor = -1;
  CHECK_THROWS_AS(nmf(V, 4, o), ArgumentError);
}

TEST_CASE("nmf: seeded runs are reproducible") {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd V = oracle::uniform(10, 6, rng);
  auto a = nmf(V, 2, {50, 1e-6, 42});
  auto b = nmf(V, 2, {50, 1e-6, 42});
  CHECK(a.G == b.G);
  CHECK(a.F == b.F);
  auto c = nmf(V, 2, {50, 1e-6, 43});
  CHECK(a.G != c.G);
}

TEST_CASE("nmf: argument validation") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Ones(4, 3);
  CHECK_THROWS_AS(nmf(V, 3), ArgumentError);
  CHECK_THROWS_AS(nmf(V, 0), ArgumentError);
  CHECK_THROWS_AS(nmf(V, 1, {0, 1e-4, 1}), ArgumentError);
  CHECK_THROWS_AS(nmf(V, 1, {10, 0.0, 1}), ArgumentError);
  V(0, 0) = -1;
  CHECK_THROWS_AS(nmf(V, 1), ArgumentError);
}

TEST_CASE("unit rng draws lie in (0, 1]") {
  UnitRng rng(0);
  for (int i = 0; i < 10000; ++i) {
    double x = rng.next();
    CHECK(x > 0.0);
    CHECK(x <= 1.0);
  }
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("lloyd quantisation") {
  Eigen::MatrixXd few(2, 2);
  few << 0.1, 0.7, 0.7, 0.3;
  CHECK(lloyd_quantize(few, 4) == few);  // unique values <= levels: exact

  std::mt19937_64 rng(2);
  Eigen::MatrixXd x = oracle::uniform(50, 4, rng);
  auto q = lloyd_quantize(x, 4);
  std::vector<double> levels(q.data(), q.data() + q.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  CHECK(levels.size() <= 4);
  // Each entry maps to its nearest level.
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double best = 1e300;
    for (double l : levels) best = std::min(best, std::abs(x.data()[i] - l));
    CHECK(std::abs(x.data()[i] - q.data()[i]) == doctest::Approx(best));
  }
  // More levels never increase distortion.
  CHECK((x - lloyd_quantize(x, 8)).squaredNorm() <= (x - q).squaredNorm() + 1e-12);
}

TEST_CASE("mdl: rank-2 planted matrix, scan 1..5") {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd G = oracle::block_memberships(60, 2, rng);
  Eigen::MatrixXd F = oracle::separated_basis(2, 12, rng);
  MdlOptions o;
  o.nmf.max_iters = 3000;
  o.nmf.tol = 1e-10;
  auto model = mdl_select_rank(G * F, 1, 5, o);
  CHECK(model.rank() == 2);
  REQUIRE(model.mdl_trace.size() == 5);
  for (const auto& s : model.mdl_trace) CHECK(model.mdl_trace[1].total() <= s.total());
  CHECK(model.column_scale.size() == 12);
  CHECK((model.basis.array() >= 0).all());
}

TEST_CASE("mdl: rank-1 outer product selects 1") {
  Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(20, 1, 3), f = Eigen::VectorXd::LinSpaced(6, 0.5, 2);
  auto model = mdl_select_rank(g * f.transpose(), 1, 3);
  CHECK(model.rank() == 1);
  CHECK(model.mdl_trace[0].rank == 1);
  CHECK(model.mdl_trace[2].rank == 3);
}

TEST_CASE("mdl: ties go to the smaller rank and ranges are validated") {
  // A zero matrix fits exactly at every rank; model bits decide.
  auto model = mdl_select_rank(Eigen::MatrixXd::Zero(10, 5), 2, 4);
  CHECK(model.rank() == 2);
  Eigen::MatrixXd V = Eigen::MatrixXd::Ones(6, 4);
  CHECK_THROWS_AS(mdl_select_rank(V, 0, 2), ArgumentError);
  CHECK_THROWS_AS(mdl_select_rank(V, 3, 2), ArgumentError);
  CHECK_THROWS_AS(mdl_select_rank(V, 1, 4), ArgumentError);
}

TEST_CASE("mdl: KL error model is available") {
  std::mt19937_64 rng(12);
  Eigen::MatrixXd V = oracle::block_memberships(40, 2, rng) * oracle::separated_basis(2, 10, rng);
  MdlOptions o;
  o.error_model = MdlErrorModel::KlDivergence;
  o.nmf.max_iters = 2000;
  o.nmf.tol = 1e-10;
  auto model = mdl_select_rank(V, 1, 4, o);
  CHECK(model.rank() >= 1);
  CHECK(parse_mdl_error_model("kl") == MdlErrorModel::KlDivergence);
  CHECK(parse_mdl_error_model(to_string(MdlErrorModel::SquaredError)) == MdlErrorModel::SquaredError);
  CHECK_THROWS_AS(parse_mdl_error_model("l1"), ArgumentError);
}

TEST_CASE("memberships: planted recovery, zero rows, fixed point and scale covariance") {
  std::mt19937_64 rng(17);
  RoleModel model;
  model.basis = oracle::separated_basis(3, 9, rng);
  model.column_scale = Eigen::VectorXd::Ones(9);
  Eigen::MatrixXd Gs = oracle::uniform(25, 3, rng);
  Eigen::MatrixXd V = Gs * model.basis;
  Eigen::MatrixXd G = estimate_memberships(V, model);
  CHECK((G - Gs).norm() / Gs.norm() < 1e-4);

  CHECK(estimate_memberships(Eigen::MatrixXd::Zero(4, 9), model).isZero(0));

  Eigen::MatrixXd G2 = estimate_memberships(G * model.basis, model);
  CHECK((G2 - G).cwiseAbs().maxCoeff() < 1e-6);

  Eigen::MatrixXd G3 = estimate_memberships(2.5 * V, model);
  CHECK((G3 - 2.5 * G).norm() < 1e-8 * G.norm());

  // A row equal to basis row k is assigned to role k.
  for (Eigen::Index k = 0; k < 3; ++k) {
    Eigen::MatrixXd row = model.basis.row(k);
    Eigen::Index arg = 0;
    estimate_memberships(row, model).row(0).maxCoeff(&arg);
    CHECK(arg == k);
  }

  // Scaled columns leave memberships of an exact fit unchanged.
  RoleModel scaled = model;
  scaled.column_scale = Eigen::VectorXd::LinSpaced(9, 1, 5);
  CHECK((estimate_memberships(V, scaled) - Gs).norm() / Gs.norm() < 1e-4);
}

TEST_CASE("memberships: column reconciliation by definition") {
  RoleModel model;
  model.basis = Eigen::MatrixXd::Identity(2, 3);
  model.column_scale = Eigen::VectorXd::Ones(3);
  model.feature_defs = {FeatureDefinition::parse("total_degree"), FeatureDefinition::parse("in_degree"),
                        FeatureDefinition::parse("out_degree")};
  FeatureMatrix V;
  V.timestep = 4;
  V.nodes = {0, 1};
  V.defs = {FeatureDefinition::parse("in_degree"), FeatureDefinition::parse("total_degree")};
  V.values.resize(2, 2);
  V.values << 0, 3, 2, 0;
  auto m = estimate_memberships(V, model);
  CHECK(m.values(0, 0) == doctest::Approx(3));
  CHECK(m.values(1, 1) == doctest::Approx(2));
  V.defs[0] = FeatureDefinition::parse("ego_internal");
  try {
    estimate_memberships(V, model);
    FAIL("expected schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("timestep 4") != std::string::npos);
  }
}

TEST_CASE("normalised memberships sum to one; zero rows stay zero") {
  MembershipMatrix m;
  m.nodes = {0, 1, 2};
  m.values.resize(3, 2);
  m.values << 1, 3, 0, 0, 2, 0;
  auto n = m.normalized_rows();
  CHECK(n.normalized);
  CHECK(n.values.row(0).sum() == doctest::Approx(1));
  CHECK(n.values.row(1).isZero(0));
  CHECK(n.values(2, 0) == 1.0);
}

TEST_CASE("serialization: role model JSON and membership CSV") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd V = oracle::block_memberships(20, 2, rng) * oracle::separated_basis(2, 6, rng);
  auto model = mdl_select_rank(V, 1, 3);
  model.feature_defs.clear();
  for (int j = 0; j < 6; ++j)
    model.feature_defs.push_back(FeatureDefinition{BaseFeature::TotalDegree, std::vector<Aggregator>(j, Aggregator::Sum)});
  auto back = role_model_from_json(role_model_to_json(model));
  CHECK(back.basis == model.basis);
  CHECK(back.column_scale == model.column_scale);
  CHECK(back.feature_defs == model.feature_defs);
  REQUIRE(back.mdl_trace.size() == model.mdl_trace.size());
  CHECK(back.mdl_trace[1].total() == model.mdl_trace[1].total());
  CHECK_THROWS(role_model_from_json("{\"rank\": 1}"));

  NodeDictionary nodes;
  for (auto l : {"x", "y", "z"}) nodes.intern(l);
  std::vector<MembershipMatrix> ms(2);
  ms[0].timestep = 1;
  ms[0].nodes = {0, 2};
  ms[0].values = Eigen::MatrixXd::Random(2, 2).cwiseAbs();
  ms[1].timestep = 2;
  ms[1].nodes = {1};
  ms[1].values = Eigen::MatrixXd::Constant(1, 2, 0.1);
  std::ostringstream out;
  write_membership_csv(out, ms, nodes);
  std::istringstream in(out.str());
  auto read = read_membership_csv(in, nodes, 2, false);
  REQUIRE(read.size() == 2);
  for (int t = 0; t < 2; ++t) {
    CHECK(read[t].nodes == ms[t].nodes);
    CHECK(read[t].values == ms[t].values);
  }
}
