#include "blockade/model.hpp"

#include <cmath>
#include <string>

#include "blockade/errors.hpp"

namespace blockade {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

int witness_levels(const SystemSpec& spec) { return spec.witness ? spec.witness->levels : 0; }

}  // namespace

void SystemSpec::validate() const {
  require(cavity_freq > 0.0, "cavity_freq must be positive");
  require(cavity_decay >= 0.0, "cavity_decay must be nonnegative");
  require(cavity_truncation >= 1, "cavity_truncation must be >= 1");
  for (std::size_t i = 0; i < emitters.size(); ++i) {
    const auto& e = emitters[i];
    const std::string tag = "emitter " + std::to_string(i) + ": ";
    require(e.freq > 0.0, tag + "freq must be positive");
    require(e.coupling >= 0.0, tag + "coupling must be nonnegative");
    require(e.decay >= 0.0, tag + "decay must be nonnegative");
  }
  if (drive) {
    require(drive->amplitude >= 0.0, "drive amplitude must be nonnegative");
    require(drive->freq > 0.0, "drive freq must be positive");
  }
  if (witness) {
    require(witness->freq > 0.0, "witness freq must be positive");
    require(witness->coupling >= 0.0, "witness coupling must be nonnegative");
    require(witness->decay >= 0.0, "witness decay must be nonnegative");
    require(witness->anharmonicity >= 0.0, "witness anharmonicity must be nonnegative");
    require(witness->levels == 2 || witness->levels == 3, "witness levels must be 2 or 3");
    if (witness->levels == 3) require(witness->anharmonicity > 0.0, "three-level witness needs alpha > 0");
  }
}

CompositeSpace SystemSpec::space(Eigen::Index cap) const {
  std::vector<int> dims;
  dims.push_back(cavity_truncation + 1);
  dims.insert(dims.end(), emitters.size(), 2);
  if (witness) dims.push_back(witness->levels);
  return CompositeSpace(std::move(dims), cap);
}

SystemSpec SystemSpec::identical(double cavity_freq, std::size_t n, double emitter_freq, double g,
                                 double kappa, double gamma, int truncation) {
  SystemSpec spec;
  spec.cavity_freq = cavity_freq;
  spec.cavity_decay = kappa;
  spec.cavity_truncation = truncation;
  spec.emitters.assign(n, Emitter{emitter_freq, g, gamma});
  return spec;
}

SystemSpec SystemSpec::reference_device(std::size_t n_emitters) {
  const double g = n_emitters == 1 ? 13.7 : 13.2;
  return identical(5230.0, n_emitters, 5230.0, g, 0.1, 0.1);
}

Witness SystemSpec::reference_witness() { return Witness{5313.0, 17.0, 227.0, 0.1, 2}; }

OperatorMatrix total_excitation_number(const SystemSpec& spec) {
  const CompositeSpace space = spec.space();
  OperatorMatrix n_tot = embed(number_operator(spec.cavity_truncation + 1), 0, space);
  for (std::size_t i = 0; i < spec.emitters.size(); ++i) {
    n_tot += embed(number_operator(2), SystemSpec::emitter_index(i), space);
  }
  if (spec.witness) n_tot += embed(number_operator(spec.witness->levels), spec.witness_index(), space);
  return n_tot;
}

OperatorMatrix build_tc_hamiltonian(const SystemSpec& spec) {
  spec.validate();
  const CompositeSpace space = spec.space();
  const OperatorMatrix a = embed(annihilation(spec.cavity_truncation + 1), 0, space);
  const OperatorMatrix a_dag = a.adjoint();

  OperatorMatrix h = spec.cavity_freq * (a_dag * a);
  for (std::size_t i = 0; i < spec.emitters.size(); ++i) {
    const Emitter& e = spec.emitters[i];
    const OperatorMatrix sm = embed(lowering_emitter(), SystemSpec::emitter_index(i), space);
    const OperatorMatrix sp = sm.adjoint();
    h += e.freq * (sp * sm);
    h += e.coupling * (a_dag * sm + a * sp);
  }
  if (spec.witness) {
    const Witness& w = *spec.witness;
    const OperatorMatrix b = embed(annihilation(w.levels), spec.witness_index(), space);
    const OperatorMatrix b_dag = b.adjoint();
    const OperatorMatrix nb = b_dag * b;
    h += w.freq * nb;
    if (w.levels == 3) {
      // -alpha/2 * n(n-1): level 2 sits at 2 omega_w - alpha.
      h -= (0.5 * w.anharmonicity) * (b_dag * b_dag * b * b);
    }
    h += w.coupling * (a_dag * b + a * b_dag);
  }
  h.require_hermitian();
  return h;
}

OperatorMatrix build_rotating_frame(const SystemSpec& spec) {
  if (!spec.drive) throw Error(ErrorCode::MissingDrive, "rotating frame needs a drive");
  OperatorMatrix h = build_tc_hamiltonian(spec);
  h -= spec.drive->freq * total_excitation_number(spec);
  const OperatorMatrix a = embed(annihilation(spec.cavity_truncation + 1), 0, h.space());
  h += spec.drive->amplitude * (a + a.adjoint());
  h.require_hermitian();
  return h;
}

DispersiveShift dispersive_shift(double g_w, double delta_w, double alpha) {
  if (delta_w == 0.0) throw Error(ErrorCode::SingularParameter, "witness detuning is zero");
  if (delta_w == alpha) throw Error(ErrorCode::SingularParameter, "witness detuning equals anharmonicity");
  const double g2 = g_w * g_w;
  return {g2 / (delta_w * (1.0 - delta_w / alpha)), g2 / delta_w};
}

double witness_chi(const Witness& witness, double cavity_freq) {
  const double delta = witness.freq - cavity_freq;
  if (witness.anharmonicity > 0.0) return dispersive_shift(witness.coupling, delta, witness.anharmonicity).chi;
  if (delta == 0.0) throw Error(ErrorCode::SingularParameter, "witness detuning is zero");
  return witness.coupling * witness.coupling / delta;
}

double lamb_shifted_witness_freq(const Witness& witness, double cavity_freq) {
  const double delta = witness.freq - cavity_freq;
  if (delta == 0.0) throw Error(ErrorCode::SingularParameter, "witness detuning is zero");
  return witness.freq + witness.coupling * witness.coupling / delta;
}

OperatorMatrix build_dispersive(const SystemSpec& spec) {
  if (!spec.witness) throw Error(ErrorCode::WitnessAbsent, "dispersive Hamiltonian needs a witness");
  spec.validate();
  const double chi = witness_chi(*spec.witness, spec.cavity_freq);
  const double w_tilde = lamb_shifted_witness_freq(*spec.witness, spec.cavity_freq);

  const CompositeSpace space({spec.cavity_truncation + 1, 2});
  const OperatorMatrix n = embed(number_operator(spec.cavity_truncation + 1), 0, space);
  const OperatorMatrix excited = embed(number_operator(2), 1, space);
  OperatorMatrix h = spec.cavity_freq * n;
  h += w_tilde * excited;
  h += (2.0 * chi) * (n * excited);
  return h;
}

std::vector<SingleExcitationMode> single_excitation_modes(const SystemSpec& spec) {
  const Eigen::Index n = static_cast<Eigen::Index>(spec.emitters.size()) + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  h(0, 0) = spec.cavity_freq;
  for (Eigen::Index i = 1; i < n; ++i) {
    const Emitter& e = spec.emitters[static_cast<std::size_t>(i - 1)];
    h(i, i) = e.freq;
    h(0, i) = e.coupling;
    h(i, 0) = e.coupling;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  std::vector<SingleExcitationMode> modes;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double amp = std::abs(solver.eigenvectors()(0, k));
    modes.push_back({solver.eigenvalues()(k), amp, amp * amp});
  }
  return modes;
}

CollapseSet build_collapse_set(const SystemSpec& spec) {
  spec.validate();
  const CompositeSpace space = spec.space();
  CollapseSet set;
  if (spec.cavity_decay > 0.0) {
    set.operators.push_back(std::sqrt(spec.cavity_decay) *
                            embed(annihilation(spec.cavity_truncation + 1), 0, space));
  }
  for (std::size_t i = 0; i < spec.emitters.size(); ++i) {
    if (spec.emitters[i].decay > 0.0) {
      set.operators.push_back(std::sqrt(spec.emitters[i].decay) *
                              embed(lowering_emitter(), SystemSpec::emitter_index(i), space));
    }
  }
  if (witness_levels(spec) > 0 && spec.witness->decay > 0.0) {
    set.operators.push_back(std::sqrt(spec.witness->decay) *
                            embed(annihilation(spec.witness->levels), spec.witness_index(), space));
  }
  return set;
}

}  // namespace blockade
