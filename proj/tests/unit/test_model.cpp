#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "blockade/model.hpp"
#include "test_support.hpp"

using namespace blockade;
using blockade::test_support::code_of;

namespace {

// Eigenvalue of the dressed state with the largest overlap on a bare basis state.
double dressed_energy(const Eigen::SelfAdjointEigenSolver<DenseMatrix>& es, Eigen::Index bare) {
  Eigen::Index best = 0;
  es.eigenvectors().row(bare).cwiseAbs2().maxCoeff(&best);
  return es.eigenvalues()(best);
}

}  // namespace

TEST(DispersiveShift, TransmonAndTwoLevelForms) {
  const auto s = dispersive_shift(17.0, 83.0, 227.0);
  EXPECT_NEAR(s.chi, 5.488872155287818, 1e-12);
  EXPECT_NEAR(s.chi_tls, 289.0 / 83.0, 1e-12);
  EXPECT_EQ(code_of([] { dispersive_shift(17.0, 0.0, 227.0); }), ErrorCode::SingularParameter);
  EXPECT_EQ(code_of([] { dispersive_shift(17.0, 227.0, 227.0); }), ErrorCode::SingularParameter);

  const Witness w = SystemSpec::reference_witness();
  EXPECT_NEAR(witness_chi(w, 5230.0), s.chi, 1e-12);
  EXPECT_NEAR(lamb_shifted_witness_freq(w, 5230.0), 5313.0 + 289.0 / 83.0, 1e-9);
  Witness tls = w;
  tls.anharmonicity = 0.0;
  EXPECT_NEAR(witness_chi(tls, 5230.0), s.chi_tls, 1e-12);
}

TEST(DispersiveShift, ApproximatesFullTransmonDiagonalization) {
  SystemSpec spec;
  spec.cavity_freq = 5230.0;
  spec.witness = SystemSpec::reference_witness();
  spec.witness->levels = 3;
  const OperatorMatrix h = build_tc_hamiltonian(spec);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
  const CompositeSpace& space = h.space();
  const double split0 = dressed_energy(es, space.index_of({0, 1})) - dressed_energy(es, space.index_of({0, 0}));
  const double split1 = dressed_energy(es, space.index_of({1, 1})) - dressed_energy(es, space.index_of({1, 0}));
  // Exact value from an independent dense diagonalization (8 x 3 levels).
  EXPECT_NEAR(split1 - split0, 9.970950572405854, 1e-8);
  // The perturbative 2 chi agrees to within higher-order corrections.
  const double chi = witness_chi(*spec.witness, spec.cavity_freq);
  EXPECT_NEAR((split1 - split0) / (2.0 * chi), 1.0, 0.10);
}

TEST(SystemSpec, Validation) {
  SystemSpec s = SystemSpec::reference_device(2);
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.emitter_count(), 2u);
  EXPECT_DOUBLE_EQ(s.emitters[0].coupling, 13.2);
  EXPECT_DOUBLE_EQ(SystemSpec::reference_device(1).emitters[0].coupling, 13.7);

  auto bad = s;
  bad.cavity_decay = -1.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidSpec);
  bad = s;
  bad.cavity_truncation = 0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidSpec);
  bad = s;
  bad.emitters[1].decay = -0.1;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidSpec);
  bad = s;
  bad.witness = SystemSpec::reference_witness();
  bad.witness->levels = 3;
  bad.witness->anharmonicity = 0.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidSpec);
}

TEST(SystemSpec, SpaceOrdering) {
  SystemSpec s = SystemSpec::reference_device(3);
  s.cavity_truncation = 4;
  s.witness = SystemSpec::reference_witness();
  const auto space = s.space();
  EXPECT_EQ(space.dims(), (std::vector<int>{5, 2, 2, 2, 2}));
  EXPECT_EQ(s.witness_index(), 4u);
  EXPECT_EQ(SystemSpec::emitter_index(2), 3u);
}

TEST(TavisCummings, ConservesExcitationNumber) {
  for (std::size_t n = 1; n <= 3; ++n) {
    SystemSpec s = SystemSpec::identical(5230.0, n, 5250.0, 13.2, 0.1, 0.1, 4);
    s.witness = SystemSpec::reference_witness();
    const auto h = build_tc_hamiltonian(s);
    EXPECT_TRUE(h.is_hermitian());
    EXPECT_LT(commutator(h, total_excitation_number(s)).max_abs(), 1e-9);
  }
}

TEST(TavisCummings, RotatingFrameShiftsDiagonal) {
  SystemSpec s = SystemSpec::reference_device(1);
  s.cavity_truncation = 3;
  EXPECT_EQ(code_of([&] { build_rotating_frame(s); }), ErrorCode::MissingDrive);
  s.drive = Drive{0.0, 5200.0};
  const DenseMatrix lab = build_tc_hamiltonian(s).dense();
  const DenseMatrix rot = build_rotating_frame(s).dense();
  const DenseMatrix n_tot = total_excitation_number(s).dense();
  EXPECT_LT((rot - (lab - 5200.0 * n_tot)).cwiseAbs().maxCoeff(), 1e-12);
  s.drive->amplitude = 0.7;
  const DenseMatrix driven = build_rotating_frame(s).dense();
  const auto space = s.space();
  EXPECT_NEAR(driven(space.index_of({1, 0}), space.index_of({0, 0})).real(), 0.7, 1e-15);
  EXPECT_NEAR(driven(space.index_of({3, 1}), space.index_of({2, 1})).real(), 0.7 * std::sqrt(3.0), 1e-14);
}

TEST(SingleExcitationModes, MatchFullSpaceSector) {
  SystemSpec s;
  s.cavity_freq = 5230.0;
  s.cavity_truncation = 2;
  s.emitters = {{5210.0, 12.5}, {5236.0, 13.7}, {5251.0, 13.4}};
  const auto modes = single_excitation_modes(s);
  ASSERT_EQ(modes.size(), 4u);

  // Restrict the full Hamiltonian to the one-excitation product states.
  const DenseMatrix h = build_tc_hamiltonian(s).dense();
  const auto space = s.space();
  std::vector<Eigen::Index> basis{space.index_of({1, 0, 0, 0}), space.index_of({0, 1, 0, 0}),
                                  space.index_of({0, 0, 1, 0}), space.index_of({0, 0, 0, 1})};
  DenseMatrix sector(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) sector(i, j) = h(basis[i], basis[j]);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sector);
  double weight_sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(modes[k].frequency, es.eigenvalues()(k), 1e-9);
    EXPECT_NEAR(modes[k].cavity_weight, std::norm(es.eigenvectors()(0, k)), 1e-12);
    weight_sum += modes[k].cavity_weight;
  }
  EXPECT_NEAR(weight_sum, 1.0, 1e-12);
}

TEST(SingleExcitationModes, ResonantPolaritonSplittingScalesAsSqrtN) {
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto modes = single_excitation_modes(SystemSpec::identical(5230.0, n, 5230.0, 13.2, 0.1, 0.1));
    const double split = modes.back().frequency - modes.front().frequency;
    EXPECT_NEAR(split, 2.0 * std::sqrt(static_cast<double>(n)) * 13.2, 1e-9);
    EXPECT_NEAR(modes.front().cavity_amplitude, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(modes.back().cavity_amplitude, 1.0 / std::sqrt(2.0), 1e-12);
    // The N - 1 remaining modes are dark.
    for (std::size_t k = 1; k + 1 < modes.size(); ++k) EXPECT_LT(modes[k].cavity_weight, 1e-20);
  }
}

TEST(Dispersive, SpectrumIsLinearInPhotonNumber) {
  SystemSpec s;
  s.cavity_freq = 5230.0;
  s.cavity_truncation = 5;
  EXPECT_EQ(code_of([&] { build_dispersive(s); }), ErrorCode::WitnessAbsent);
  s.witness = SystemSpec::reference_witness();
  const DenseMatrix h = build_dispersive(s).dense();
  const double chi = witness_chi(*s.witness, s.cavity_freq);
  const double wt = lamb_shifted_witness_freq(*s.witness, s.cavity_freq);
  const CompositeSpace space({6, 2});
  for (int n = 0; n <= 5; ++n) {
    const double line = h(space.index_of({n, 1}), space.index_of({n, 1})).real() -
                        h(space.index_of({n, 0}), space.index_of({n, 0})).real();
    EXPECT_NEAR(line, wt + 2.0 * chi * n, 1e-9);
  }
  EXPECT_LT((h - DenseMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Collapse, ChannelsAndRates) {
  SystemSpec s = SystemSpec::identical(5230.0, 2, 5230.0, 13.2, 0.4, 0.0, 3);
  auto c = build_collapse_set(s);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c.operators[0].max_abs(), std::sqrt(0.4) * std::sqrt(3.0), 1e-14);
  s.emitters[1].decay = 0.09;
  s.witness = SystemSpec::reference_witness();
  c = build_collapse_set(s);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_NEAR(c.operators[1].max_abs(), 0.3, 1e-14);
  s.cavity_decay = 0.0;
  s.emitters[1].decay = 0.0;
  s.witness->decay = 0.0;
  EXPECT_TRUE(build_collapse_set(s).empty());
}
