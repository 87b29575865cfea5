#pragma once

#include <filesystem>
#include <string>

#include "ddcqa/netmodel.hpp"

namespace testing_support {

inline std::filesystem::path case_path(const std::string& name) {
  return std::filesystem::path(DDCQA_DATA_DIR) / "cases" / (name + ".m");
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(DDCQA_TEST_DATA) / name;
}

inline ddcqa::NetworkCase load(const std::string& name) { return ddcqa::load_case(case_path(name)); }

inline ddcqa::NetworkCase load_fixture(const std::string& name) { return ddcqa::load_case(fixture(name)); }

}  // namespace testing_support

#include "ddcqa/opf.hpp"
#include "ddcqa/surrogate.hpp"

namespace testing_support {

/// Convex stand-ins for every OPF target: single ridge fits on sampled
/// power flows.
inline ddcqa::ModelSet fitted_models(const ddcqa::NetworkCase& net, const ddcqa::AdmittanceMatrix& y,
                                     int samples = 60, std::uint64_t seed = 3) {
  ddcqa::SamplingOptions so;
  so.count = samples;
  so.seed = seed;
  const ddcqa::Dataset ds = ddcqa::generate_dataset(net, ddcqa::sample_load_scenarios(net, so), so);
  ddcqa::ModelSet out;
  for (const auto& id : ddcqa::opf_targets(net)) out.emplace(id, ddcqa::pr_fit(ds, id, y).collapsed);
  return out;
}

/// The exact, generally indefinite, forms; only fit for evaluation.
inline ddcqa::ModelSet exact_models(const ddcqa::NetworkCase& net, const ddcqa::AdmittanceMatrix& y) {
  ddcqa::ModelSet out;
  for (const auto& id : ddcqa::opf_targets(net)) {
    const ddcqa::LocalQuadratic m = ddcqa::injection_matrix(id, y);
    ddcqa::ConvexQuadratic q;
    q.target = id;
    q.vars = m.vars;
    q.a = m.m;
    q.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.vars.size()));
    out.emplace(id, q);
  }
  return out;
}

}  // namespace testing_support
