#include <gtest/gtest.h>

#include <smoothctl/builtin.hpp>
#include <smoothctl/core.hpp>

using namespace smoothctl;

namespace {

bool is_hermitian(const Mat2& h, double tol) { return max_abs(Mat2(h - h.adjoint())) <= tol * std::max(1.0, max_abs(h)); }

}  // namespace

TEST(Envelope, ZeroCoefficientsGiveZero) {
  const auto env = FourierEnvelope::zeros(5, 500e-9);
  for (double t : {0.0, 100e-9, 500e-9}) {
    const auto q = eval_envelope(env, t);
    EXPECT_EQ(q.f1, 0.0);
    EXPECT_EQ(q.f2, 0.0);
  }
}

TEST(Envelope, VanishesAtBothEndsWithDefaultFundamental) {
  for (const auto* t : builtin::kTables) {
    const auto env = builtin::envelope(*t);
    const auto q0 = eval_envelope(env, 0.0);
    EXPECT_EQ(q0.f1, 0.0);
    EXPECT_EQ(q0.f2, 0.0);
    const auto q1 = eval_envelope(env, env.duration_s);
    EXPECT_NEAR(q1.f1, 0.0, 1e-6);  // sin(j pi) rounding, Hz
    EXPECT_NEAR(q1.f2, 0.0, 1e-6);
  }
}

TEST(Envelope, SingleHarmonicPeak) {
  FourierEnvelope env{1e6, 500e-9, {10e6}, {0.0}};
  const auto q = eval_envelope(env, 250e-9);
  EXPECT_NEAR(q.f1, 10e6, 1e-6);
  EXPECT_EQ(q.f2, 0.0);
}

TEST(Envelope, OutOfRangeTimeThrows) {
  const auto env = builtin::pi();
  EXPECT_THROW(eval_envelope(env, -1e-9), DomainError);
  EXPECT_THROW(eval_envelope(env, 501e-9), DomainError);
}

TEST(Envelope, ValidationRejectsMismatchedLists) {
  EXPECT_THROW(FourierEnvelope::with_default_fundamental(1e-6, {1.0, 2.0}, {1.0}), DomainError);
  EXPECT_THROW(FourierEnvelope::with_default_fundamental(1e-6, {}, {}), DomainError);
  EXPECT_THROW(FourierEnvelope::with_default_fundamental(0.0, {1.0}, {1.0}), DomainError);
}

TEST(Hamiltonian, DriftOnly) {
  const ControlProgram prog(FourierEnvelope::zeros(3, 1e-6));
  const Mat2 h = hamiltonian_at(prog, 0.3e-6, {2e6, 1.0, 1.0});
  EXPECT_LT(max_abs(Mat2(h - kPi * 2e6 * pauli::z())), 1e-6);
}

TEST(Hamiltonian, ResonantConstantDrive) {
  const ControlProgram prog(ConstantEnvelope{10e6, 0.0, 50e-9});
  const Mat2 h = hamiltonian_at(prog, 20e-9, {0.0, 1.0, 1.0});
  EXPECT_LT(max_abs(Mat2(h - kPi * 10e6 * pauli::x())), 1e-6);
}

TEST(Hamiltonian, ScaleDoublesDriveOnly) {
  const ControlProgram prog(builtin::pi());
  const Mat2 h1 = hamiltonian_at(prog, 123e-9, {3e6, 1.0, 1.0});
  const Mat2 h2 = hamiltonian_at(prog, 123e-9, {3e6, 2.0, 1.0});
  const Mat2 drift = kPi * 3e6 * pauli::z();
  EXPECT_LT(max_abs(Mat2((h2 - drift) - 2.0 * (h1 - drift))), 1e-6);
  EXPECT_NEAR(h2(0, 0).real(), h1(0, 0).real(), 1e-6);
}

TEST(Hamiltonian, DelayAddsZeemanShift) {
  const ControlProgram prog(std::vector<Segment>{Delay{1e-6, 5e6}});
  const Mat2 h = hamiltonian_at(prog, 0.5e-6, {1e6, 1.0, 1.0});
  EXPECT_LT(max_abs(Mat2(h - kPi * 6e6 * pauli::z())), 1e-6);
}

TEST(Hamiltonian, HermitianAcrossBuiltins) {
  for (const auto* t : builtin::kTables) {
    const ControlProgram prog(builtin::envelope(*t));
    for (int i = 0; i <= 200; ++i) {
      const double time = prog.duration() * i / 200;
      EXPECT_TRUE(is_hermitian(hamiltonian_at(prog, time, {1.7e6, 0.9, 1.0}), 1e-15));
    }
  }
}

TEST(Hamiltonian, OutOfRangeThrows) {
  const ControlProgram prog(builtin::pi());
  EXPECT_THROW(hamiltonian_at(prog, 600e-9, {}), DomainError);
}

TEST(MaxRabi, PublishedPeakAmplitudes) {
  // published peaks: 9.49, 18.8, 19.4 MHz
  EXPECT_NEAR(max_rabi(ControlProgram(builtin::pi())), 9.49e6, 0.05e6);
  EXPECT_NEAR(max_rabi(ControlProgram(builtin::pi2_y())), 18.8e6, 0.1e6);
  EXPECT_NEAR(max_rabi(ControlProgram(builtin::pi_x())), 19.4e6, 0.1e6);
}

TEST(MaxRabi, ConstantEnvelopeExact) {
  EXPECT_EQ(max_rabi(ControlProgram(ConstantEnvelope{10e6, 0.0, 50e-9})), 10e6);
  EXPECT_DOUBLE_EQ(max_rabi(ControlProgram(ConstantEnvelope{10e6, 0.7, 50e-9}), 4096, AmplitudeNorm::euclidean),
                   10e6);
}

TEST(MaxRabi, GridRefinementChangesLittle) {
  for (const auto* t : builtin::kTables) {
    const ControlProgram prog(builtin::envelope(*t));
    for (auto norm : {AmplitudeNorm::per_quadrature, AmplitudeNorm::euclidean}) {
      const double coarse = max_rabi(prog, 4096, norm);
      const double fine = max_rabi(prog, 8191, norm);  // contains the coarse grid
      EXPECT_GE(fine, coarse);
      EXPECT_LT((fine - coarse) / coarse, 1e-3);
    }
  }
}

TEST(MaxRabi, RejectsSparseGrid) {
  EXPECT_THROW(max_rabi(ControlProgram(builtin::pi()), 63), DomainError);
}

TEST(Composite, DurationsAndPhases) {
  const auto prog = make_composite_pi(10e6);
  EXPECT_NEAR(prog.duration(), 100e-9, 1e-18);
  ASSERT_EQ(prog.segments().size(), 3u);
  const double want_phase[] = {kPi / 2, 0.0, kPi / 2};
  const double want_dur[] = {25e-9, 50e-9, 25e-9};
  for (int i = 0; i < 3; ++i) {
    const auto& c = std::get<ConstantEnvelope>(prog.segments()[i]);
    EXPECT_NEAR(c.phase_rad, want_phase[i], 1e-15);
    EXPECT_NEAR(c.duration_s, want_dur[i], 1e-20);
    EXPECT_EQ(c.rabi_hz, 10e6);
  }
  EXPECT_NEAR(make_composite_pi(20e6).duration(), 50e-9, 1e-18);
  EXPECT_THROW(make_composite_pi(0.0), DomainError);
  EXPECT_THROW(make_composite_pi(-1.0), DomainError);
}

TEST(Window, WeightsSumToOne) {
  const std::vector<RobustnessWindow> windows{
      RobustnessWindow::uniform(4e6, 17, {0.8, 0.9, 1.0, 1.1, 1.2}),
      RobustnessWindow::gaussian(8e6, 9, {0.75, 0.875, 1.0, 1.125, 1.25}),
      RobustnessWindow::gaussian(1e6, 1, {1.0}),
      RobustnessWindow::single(3e6, 0.9),
  };
  for (const auto& w : windows) {
    double total = 0.0;
    for (const auto& p : w.points()) {
      EXPECT_GE(p.weight, 0.0);
      total += p.weight;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Window, GaussianSpanAndShape) {
  const auto w = RobustnessWindow::gaussian(8e6, 9, {1.0});
  const auto pts = w.points();
  ASSERT_EQ(pts.size(), 9u);
  EXPECT_NEAR(pts.front().detuning_hz, -6e6, 1e-6);
  EXPECT_NEAR(pts.back().detuning_hz, 6e6, 1e-6);
  const double sigma = 8e6 / 2.355;
  EXPECT_NEAR(pts[0].weight / pts[4].weight, std::exp(-0.5 * 36e12 / (sigma * sigma)), 1e-12);
}

TEST(Window, InvalidSpecsThrow) {
  EXPECT_THROW(RobustnessWindow::uniform(1e6, 0, {1.0}), DomainError);
  EXPECT_THROW(RobustnessWindow::gaussian(0.0, 5, {1.0}), DomainError);
  EXPECT_THROW(RobustnessWindow::uniform(1e6, 3, {}), DomainError);
  EXPECT_THROW(RobustnessWindow::uniform(1e6, 3, {-1.0}), DomainError);
}

TEST(Program, LocateAndCompose) {
  const ControlProgram a(ConstantEnvelope{10e6, 0.0, 50e-9});
  const ControlProgram b(std::vector<Segment>{Delay{100e-9, 0.0}});
  const auto ab = a.then(b);
  EXPECT_NEAR(ab.duration(), 150e-9, 1e-20);
  EXPECT_EQ(ab.locate(10e-9).first, 0u);
  EXPECT_EQ(ab.locate(50e-9).first, 1u);
  EXPECT_EQ(ab.locate(150e-9).first, 1u);
  EXPECT_THROW(ControlProgram(std::vector<Segment>{}), DomainError);
}

TEST(Builtin, TablesVerbatim) {
  EXPECT_EQ(builtin::kPi.x[0], -1.177);
  EXPECT_EQ(builtin::kPi2Y.y[8], -10.375);
  EXPECT_EQ(builtin::kPiX.x[9], -3.960);
  const auto env = builtin::pi();
  EXPECT_EQ(env.coeffs_x_hz[0], -1.177 * 2e6);
  EXPECT_EQ(env.fundamental_hz, 1e6);
  EXPECT_EQ(builtin::pi_x().fundamental_hz, 2e6);
  EXPECT_THROW(builtin::envelope("nope"), DomainError);
}

TEST(PhaseShift, RotatesQuadratures) {
  const auto env = builtin::pi();
  const auto rot = phase_shifted(env, kPi / 2);
  const auto q = eval_envelope(env, 170e-9);
  const auto r = eval_envelope(rot, 170e-9);
  EXPECT_NEAR(r.f1, -q.f2, 1e-6);
  EXPECT_NEAR(r.f2, q.f1, 1e-6);
}
