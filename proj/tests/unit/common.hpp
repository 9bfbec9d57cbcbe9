#pragma once

// Small kicked base state shared by the operator tests.

#include <memory>

#include "kickflow/ergodicity.hpp"
#include "kickflow/kick_noise.hpp"
#include "kickflow/linearization.hpp"
#include "kickflow/ns_dynamics.hpp"

namespace kftest {

struct SmallSystem {
  kickflow::DomainSpec domain;
  kickflow::SolverConfig solver;
  std::unique_ptr<kickflow::GalerkinModel> model;
  std::unique_ptr<kickflow::NoiseModel> noise;
  kickflow::SpectralField u;
  kickflow::KickPath eta;
  kickflow::Trajectory base;
  std::unique_ptr<kickflow::TangentContext> ctx;
  kickflow::TangentOperators ops;

  SmallSystem() {
    domain.mx = 3;
    domain.ny = 3;
    solver.dt = 5e-3;
    model = std::make_unique<kickflow::GalerkinModel>(domain, solver);
    noise = std::make_unique<kickflow::NoiseModel>(kickflow::NoiseSpec{}, model->basis());
    u = kickflow::markov_run(*model, *noise, model->basis().zero(), 5, 7).back();
    eta = noise->sample(kickflow::kick_stream(7, 0, 5));
    base = model->flow(u, eta, true, false);
    ctx = std::make_unique<kickflow::TangentContext>(*model, base);
    ops = kickflow::assemble_all(*ctx, noise->time_order());
  }

  static const SmallSystem& get() {
    static const SmallSystem s;
    return s;
  }
};

}  // namespace kftest
