#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "comanip/agent_mpc.hpp"
#include "comanip/planar_dynamics.hpp"

using namespace comanip;

namespace {

ObjectParams frictionless(double m, double I_G, Vec2 r_p) {
  ObjectParams p;
  p.m_b = m;
  p.I_Gzz = I_G;
  p.r_p = r_p;
  p.mu = 0.0;
  return p;
}

}  // namespace

TEST(Rotation, IdentityAtZero) { EXPECT_TRUE(rotation(0.0).isApprox(Mat3::Identity(), 1e-15)); }

TEST(Rotation, QuarterTurnColumns) {
  const Mat3 r = rotation(std::numbers::pi / 2);
  EXPECT_TRUE(r.col(0).isApprox(Vec3(0, 1, 0), 1e-15));
  EXPECT_TRUE(r.col(1).isApprox(Vec3(-1, 0, 0), 1e-15));
  EXPECT_TRUE(r.col(2).isApprox(Vec3(0, 0, 1), 1e-15));
}

TEST(Rotation, GroupPropertyAndOrthonormal) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    EXPECT_TRUE((rotation(a) * rotation(b)).isApprox(rotation(a + b), 1e-12));
    EXPECT_NEAR(rotation(a).determinant(), 1.0, 1e-12);
    EXPECT_TRUE((rotation(a) * rotation(a).transpose()).isApprox(Mat3::Identity(), 1e-12));
  }
}

TEST(MassMatrix, ZeroOffsetIsDiagonal) {
  const ObjectParams p = frictionless(5.0, 0.5, Vec2::Zero());
  const Vec3 diag(5.0, 5.0, 0.5);
  EXPECT_TRUE(mass_matrix(p, 0.0).isApprox(Mat3(diag.asDiagonal()), 1e-14));
  EXPECT_TRUE(mass_matrix(p, 1.3).isApprox(Mat3(diag.asDiagonal()), 1e-14));
}

TEST(MassMatrix, OffsetEntries) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2(0.2, 0.1));
  const Mat3 h = mass_matrix(p, 0.0);
  EXPECT_NEAR(h(0, 2), 0.5, 1e-14);
  EXPECT_NEAR(h(1, 2), -1.0, 1e-14);
  EXPECT_NEAR(h(2, 2), 0.4 + 5.0 * 0.05, 1e-14);
  EXPECT_TRUE(h.isApprox(h.transpose(), 1e-15));
}

TEST(MassMatrix, RejectsInvalidParameters) {
  ObjectParams p = frictionless(5.0, 0.4, Vec2::Zero());
  p.I_Gzz = 0.0;
  EXPECT_THROW(mass_matrix(p, 0.0), std::invalid_argument);
  p.I_Gzz = 0.4;
  p.m_b = -1.0;
  EXPECT_THROW(mass_matrix(p, 0.0), std::invalid_argument);
}

TEST(MassMatrix, PositiveDefiniteOnRandomSamples) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const ObjectParams p =
        frictionless(0.1 + 20.0 * u(rng), 0.01 + 2.0 * u(rng), Vec2(u(rng) - 0.5, u(rng) - 0.5));
    const Eigen::SelfAdjointEigenSolver<Mat3> es(mass_matrix(p, 10.0 * u(rng) - 5.0));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Coriolis, Examples) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2(0.2, 0.1));
  EXPECT_TRUE(coriolis_vector(p, 0.7, 0.0).isZero(0.0));
  EXPECT_TRUE(coriolis_vector(frictionless(5.0, 0.4, Vec2::Zero()), 0.7, 3.0).isZero(0.0));
  EXPECT_TRUE(coriolis_vector(p, 0.0, 1.0).isApprox(Vec3(1.0, 0.5, 0.0), 1e-14));
}

TEST(Coriolis, MatrixTimesRateMatchesVector) {
  const ObjectParams p = frictionless(3.0, 0.2, Vec2(-0.1, 0.25));
  const double theta = 0.4, omega = -1.7;
  const Vec3 qdot(0.3, -0.2, omega);
  EXPECT_TRUE((coriolis_matrix(p, theta, omega) * qdot).isApprox(coriolis_vector(p, theta, omega), 1e-14));
}

TEST(Invariants, SkewSymmetryAndRegressorSuite) {
  const checks::CheckResult r = checks::analytic_invariants(1000, 1);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Friction, KineticForce) {
  ObjectParams p = frictionless(5.0, 0.4, Vec2::Zero());
  p.mu = 0.3;
  ObjectState s;
  s.v_p = Vec2(1.0, 0.0);
  const Wrench f = friction_wrench(p, s, Wrench{});
  EXPECT_NEAR(f.f.x(), -14.715, 1e-12);
  EXPECT_NEAR(f.f.y(), 0.0, 1e-12);
}

TEST(Friction, FrictionlessIsZero) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2(0.1, 0.0));
  ObjectState s;
  s.v_p = Vec2(0.3, -2.0);
  s.omega = 1.0;
  const Wrench f = friction_wrench(p, s, Wrench{Vec2(3, 4), 1.0});
  EXPECT_TRUE(f.stacked().isZero(0.0));
}

TEST(Friction, StaticStickBelowCap) {
  ObjectParams p = frictionless(5.0, 0.4, Vec2::Zero());
  p.mu = 0.3;
  const ObjectState s;
  const Wrench applied{Vec2(5.0, 0.0), 0.0};
  const FrictionResult fr = friction(p, s, applied);
  EXPECT_TRUE(fr.sticking);
  EXPECT_TRUE(fr.wrench.stacked().isApprox(Vec3(-5.0, 0.0, 0.0), 1e-14));
  const ObjectState next = step(s, p, applied, 1e-3);
  EXPECT_TRUE(next.qdot().isZero(0.0));
  EXPECT_TRUE(next.q().isZero(0.0));
}

TEST(Friction, StaticBreakawayAboveCap) {
  ObjectParams p = frictionless(5.0, 0.4, Vec2::Zero());
  p.mu = 0.3;
  const FrictionResult fr = friction(p, ObjectState{}, Wrench{Vec2(20.0, 0.0), 0.0});
  EXPECT_FALSE(fr.sticking);
  EXPECT_NEAR(fr.wrench.f.x(), -14.715, 1e-12);
}

TEST(Contact, LineOfActionThroughReferencePoint) {
  ContactSpec c;
  c.r_0 = Vec2(-0.5, 0.0);
  c.n_hat = Vec2(1.0, 0.0);
  c.t_hat = Vec2(0.0, 1.0);
  const ObjectState s;
  const std::vector<ContactSpec> contacts{c};
  const std::vector<AgentState> agents{desired_agent_state(s, c, 0.0, c.standoff)};
  const std::vector<double> f{10.0};
  const ContactResult r = contact_resolve(s, contacts, agents, f, 0.01);
  ASSERT_TRUE(r.in_contact[0]);
  EXPECT_TRUE(r.on_object.stacked().isApprox(Vec3(10.0, 0.0, 0.0), 1e-14));
  EXPECT_TRUE(r.on_agent[0].isApprox(Vec2(-10.0, 0.0), 1e-14));
}

TEST(Contact, OffsetContactMoment) {
  ContactSpec c;
  c.r_0 = Vec2(-0.5, 0.0);
  c.n_hat = Vec2(1.0, 0.0);
  c.t_hat = Vec2(0.0, 1.0);
  c.d_max = 0.3;
  const ObjectState s;
  const std::vector<ContactSpec> contacts{c};
  const std::vector<AgentState> agents{desired_agent_state(s, c, 0.2, c.standoff)};
  const std::vector<double> f{10.0};
  const ContactResult r = contact_resolve(s, contacts, agents, f, 0.01);
  ASSERT_TRUE(r.in_contact[0]);
  EXPECT_NEAR(r.on_object.m, -2.0, 1e-12);
}

TEST(Contact, SeparatedAgentContributesNothing) {
  ContactSpec c;
  c.r_0 = Vec2(-0.5, 0.0);
  const double tol = 0.01;
  const ObjectState s;
  const std::vector<ContactSpec> contacts{c};
  const std::vector<AgentState> agents{desired_agent_state(s, c, 0.0, c.standoff + 2.0 * tol)};
  const std::vector<double> f{10.0};
  const ContactResult r = contact_resolve(s, contacts, agents, f, tol);
  EXPECT_FALSE(r.in_contact[0]);
  EXPECT_TRUE(r.on_object.stacked().isZero(0.0));
}

TEST(Contact, OffFaceAgentIsDropped) {
  ContactSpec c;
  c.r_0 = Vec2(-0.5, 0.0);
  c.d_max = 0.4;
  const ObjectState s;
  const std::vector<ContactSpec> contacts{c};
  const std::vector<AgentState> agents{desired_agent_state(s, c, 1.0, c.standoff)};
  const std::vector<double> f{10.0};
  EXPECT_FALSE(contact_resolve(s, contacts, agents, f, 0.03).in_contact[0]);
}

TEST(Contact, PushOnly) {
  ContactSpec c;
  c.r_0 = Vec2(-0.5, 0.0);
  const ObjectState s;
  const std::vector<ContactSpec> contacts{c};
  const std::vector<AgentState> agents{desired_agent_state(s, c, 0.0, c.standoff)};
  const std::vector<double> f{-7.0};
  EXPECT_TRUE(contact_resolve(s, contacts, agents, f, 0.01).on_object.stacked().isZero(0.0));
}

TEST(Step, EquilibriumAtRest) {
  ObjectParams p = frictionless(5.0, 0.4, Vec2(0.1, -0.05));
  p.mu = 0.3;
  ObjectState s;
  s.x_p = Vec2(1.0, 2.0);
  s.theta = 0.3;
  const ObjectState next = step(s, p, Wrench{}, 1e-3);
  EXPECT_TRUE(next.q().isApprox(s.q(), 1e-15));
  EXPECT_TRUE(next.qdot().isZero(0.0));
}

TEST(Step, ForceOverMass) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2::Zero());
  const ObjectState next = step(ObjectState{}, p, Wrench{Vec2(5.0, 0.0), 0.0}, 1e-3);
  EXPECT_NEAR(next.v_p.x(), 0.001, 1e-15);
  EXPECT_NEAR(next.v_p.y(), 0.0, 1e-15);
}

TEST(Step, RejectsNonPositiveDt) {
  EXPECT_THROW(step(ObjectState{}, ObjectParams{}, Wrench{}, 0.0), std::invalid_argument);
}

TEST(Step, WrapsYaw) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2::Zero());
  ObjectState s;
  s.theta = std::numbers::pi - 1e-4;
  s.omega = 1.0;
  const ObjectState next = step(s, p, Wrench{}, 1e-3);
  EXPECT_LE(next.theta, std::numbers::pi);
  EXPECT_GT(next.theta, -std::numbers::pi);
  EXPECT_LT(next.theta, 0.0);
}

namespace {

ObjectState integrate(const ObjectParams& p, const Wrench& tau, double dt, double duration) {
  ObjectState s;
  const long n = std::lround(duration / dt);
  for (long k = 0; k < n; ++k) s = step(s, p, tau, dt);
  return s;
}

}  // namespace

TEST(Step, RefinementConvergesFirstOrder) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2(0.2, -0.1));
  const Wrench tau{Vec2(3.0, -1.0), 0.8};
  const ObjectState coarse = integrate(p, tau, 1e-3, 1.0);
  const ObjectState fine = integrate(p, tau, 1e-4, 1.0);
  const ObjectState finest = integrate(p, tau, 1e-5, 1.0);
  const double e1 = (coarse.q() - finest.q()).norm();
  const double e2 = (fine.q() - finest.q()).norm();
  EXPECT_LT(e1, 5e-3);
  EXPECT_LT(e2, 0.2 * e1);
}

TEST(Step, FreeMotionConservesMomentum) {
  const ObjectParams p = frictionless(5.0, 0.4, Vec2(0.2, -0.1));
  ObjectState s;
  s.v_p = Vec2(0.3, -0.4);
  s.omega = 2.0;
  const Vec2 lin0 = p.m_b * com_velocity(p, s);
  const double ang0 = p.I_Gzz * s.omega;
  for (int k = 0; k < 10000; ++k) s = step(s, p, Wrench{}, 1e-3);
  const Vec2 lin1 = p.m_b * com_velocity(p, s);
  const double ang1 = p.I_Gzz * s.omega;
  EXPECT_LT((lin1 - lin0).norm() / lin0.norm(), 1e-6);
  EXPECT_LT(std::abs(ang1 - ang0) / std::abs(ang0), 1e-6);
}
