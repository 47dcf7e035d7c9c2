#include "tsig_cli/commands.hpp"

#include <cstdio>
#include <sstream>

#include "tsig/cylinder_aps.hpp"
#include "tsig/heat_kernel.hpp"
#include "tsig/signature.hpp"
#include "tsig/spectral.hpp"
#include "tsig_cli/json_writer.hpp"
#include "tsig_cli/verify.hpp"

namespace tsig::cli {

namespace {

using nlohmann::json;

json mode_json(const Mode& m) { return {{"k", m.k}, {"channel", m.channel}}; }

json eta_json(const EtaEstimate& e) {
  return {{"value", e.value},
          {"error_estimate", e.error_estimate},
          {"method", e.method},
          {"truncation", e.truncation},
          {"grid", e.grid},
          {"warnings", e.warnings}};
}

json cmd_betti(const RunConfig& cfg) {
  const CohomologyResult r = twisted_cohomology(cfg.metric, cfg.bundle, cfg.flux, cfg.truncation);
  return {{"b_even", r.b_even},
          {"b_odd", r.b_odd},
          {"kernel_tolerance", r.kernel_tolerance},
          {"truncation", cfg.truncation},
          {"verified_mode_radius", r.verified_mode_radius}};
}

json cmd_signature(const RunConfig& cfg) {
  const cplx lambda = param_complex(cfg, "lambda", 1.0);
  const int k = param_int(cfg, "signature_truncation", 1);
  const SignatureResult form = hermitian_form(cfg.metric, cfg.bundle, cfg.flux, lambda, k);
  const SignatureResult split = harmonic_splitting_signature(cfg.metric, cfg.bundle, cfg.flux, k);
  const IndexSplitReport idx = index_split_check(cfg.metric, cfg.bundle, cfg.flux, k);
  const AdmissibilityReport adm = anticommutation_defect(cfg.metric, cfg.bundle, rescale_flux(cfg.flux, kI), k);
  return {{"hermitian_form",
           {{"signature", form.signature},
            {"dim_plus", form.dim_plus},
            {"dim_minus", form.dim_minus},
            {"lambda", {lambda.real(), lambda.imag()}},
            {"hermiticity_defect", form.defect},
            {"degeneracy_tolerance", 1e-8}}},
          {"harmonic_splitting",
           {{"signature", split.signature},
            {"dim_plus", split.dim_plus},
            {"dim_minus", split.dim_minus},
            {"tau_invariance_defect", split.defect},
            {"tolerance", 1e-8}}},
          {"index_split",
           {{"index_even", idx.index_even},
            {"index_odd", idx.index_odd},
            {"signature", idx.signature},
            {"euler", idx.euler},
            {"even_identity", idx.even_identity},
            {"odd_identity", idx.odd_identity}}},
          {"anticommutation",
           {{"defect", adm.defect}, {"admissible", adm.admissible}, {"flux_norm", adm.flux_norm}, {"tolerance", 1e-10}}},
          {"truncation", k}};
}

json cmd_eta(const RunConfig& cfg) {
  const OddSignatureOperator op(cfg.metric, cfg.bundle, cfg.flux, cfg.truncation);
  return eta_json(eta_invariant(op, eta_method_from_string(param_string(cfg, "eta_method", "auto"))));
}

json cmd_rho(const RunConfig& cfg) {
  return eta_json(rho_invariant(cfg.metric, cfg.bundle, cfg.flux, cfg.truncation,
                                eta_method_from_string(param_string(cfg, "eta_method", "auto"))));
}

json cmd_spectral_flow(const RunConfig& cfg) {
  const int steps = param_int(cfg, "steps", 64);
  FluxForm start(cfg.metric.dim());
  if (cfg.parameters.contains("start_flux")) {
    start = parse_flux(cfg.parameters.at("start_flux"), cfg.metric.dim(), "/parameters/start_flux");
  }
  const SpectralFlowResult r = spectral_flow(cfg.metric, cfg.bundle, start, cfg.flux, cfg.truncation, steps);
  json crossings = json::array();
  for (const Crossing& c : r.crossings)
    crossings.push_back({{"u", c.u}, {"sign", c.sign}, {"multiplicity", c.multiplicity}, {"mode", mode_json(c.mode)}});
  return {{"flow", r.flow},
          {"crossings", crossings},
          {"evaluations", r.steps},
          {"path_steps", steps},
          {"level", r.level},
          {"localization_tolerance", 1e-6},
          {"overlap_threshold", r.overlap_threshold},
          {"tracked_blocks", r.tracked_blocks},
          {"truncation", cfg.truncation}};
}

CylinderProblem cylinder(const RunConfig& cfg) {
  return {cfg.metric, cfg.bundle, cfg.flux, param_double(cfg, "length", 1.0), cfg.truncation};
}

json cmd_aps(const RunConfig& cfg) {
  const CylinderProblem p = cylinder(cfg);
  const APSIndexResult r = aps_cylinder_index(p);
  const BoundaryIdentification b = boundary_identification_check(p);
  return {{"index", r.index},
          {"dim_ker_plus", r.dim_ker_plus},
          {"dim_ker_minus", r.dim_ker_minus},
          {"h_plus", r.h_plus},
          {"h_minus", r.h_minus},
          {"h_infinity", r.h_infinity},
          {"dim_ker_boundary", r.dim_ker_boundary},
          {"index_plus_kernel", r.index + r.dim_ker_boundary},
          {"length", p.length},
          {"boundary_identification_defect", b.max()},
          {"boundary_identification_tolerance", 1e-10},
          {"truncation", cfg.truncation}};
}

json cmd_interval(const RunConfig& cfg) {
  const IntervalCohomologyReport r = interval_cohomology(cylinder(cfg));
  return {{"absolute", {{"dim_even", r.absolute.dim_even}, {"dim_odd", r.absolute.dim_odd}}},
          {"relative", {{"dim_even", r.relative.dim_even}, {"dim_odd", r.relative.dim_odd}}},
          {"projection_rank", r.projection_rank},
          {"pairing_max", r.pairing_max},
          {"kernel_tolerance", r.kernel_tolerance},
          {"length", param_double(cfg, "length", 1.0)},
          {"truncation", cfg.truncation}};
}

HeatGrading grading_from(const std::string& name) {
  if (name == "none") return HeatGrading::None;
  if (name == "parity") return HeatGrading::Parity;
  if (name == "tau") return HeatGrading::Tau;
  throw ConfigError("/parameters/grading", "grading must be none, parity or tau");
}

std::string cmd_heat(const RunConfig& cfg) {
  const std::vector<double> t = param_doubles(cfg, "t", default_heat_grid());
  const std::string method = param_string(cfg, "method", cfg.flux.is_zero() ? "both" : "eigen");
  const bool functions_only = param_bool(cfg, "functions_only", false);
  const HeatGrading grading = grading_from(param_string(cfg, "grading", "none"));
  if (method != "eigen" && method != "images" && method != "both") {
    throw ConfigError("/parameters/method", "method must be eigen, images or both");
  }
  if (method != "eigen" && (!cfg.flux.is_zero() || grading != HeatGrading::None)) {
    throw ConfigError("/parameters/method", "the image sum needs H = 0 and an ungraded trace");
  }
  std::vector<HeatTrace> traces;
  if (method != "images")
    traces.push_back(heat_trace_eigen(cfg.metric, cfg.bundle, cfg.flux, t, cfg.truncation, grading, functions_only));
  if (method != "eigen") traces.push_back(heat_trace_images(cfg.metric, cfg.bundle, t, functions_only));
  std::string out = "t,value,method,tail_bound\n";
  char buf[128];
  for (const HeatTrace& h : traces)
    for (std::size_t i = 0; i < h.t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%.17g\n", h.t[i], h.values[i], h.method.c_str(), h.tail_bound[i]);
      out += buf;
    }
  return out;
}

json cmd_alpha0(const RunConfig& cfg) {
  const int n = cfg.metric.dim();
  const std::vector<double> t = param_doubles(cfg, "t", default_heat_grid());
  const HeatGrading grading = grading_from(param_string(cfg, "grading", n % 2 == 0 ? "tau" : "parity"));
  const HeatTrace str = heat_trace_eigen(cfg.metric, cfg.bundle, cfg.flux, t, cfg.truncation, grading);
  const Alpha0Result r = alpha0_extract(str.t, str.values, n);
  json coeffs = json::array();
  for (std::size_t i = 0; i < r.powers.size(); ++i)
    coeffs.push_back({{"power", 0.5 * r.powers[i]}, {"value", r.coefficients(static_cast<Eigen::Index>(i))}});
  double tail = 0.0;
  for (double v : str.tail_bound) tail = std::max(tail, v);
  return {{"alpha0", r.alpha0},
          {"residual", r.residual},
          {"condition", r.condition},
          {"coefficients", coeffs},
          {"grading", param_string(cfg, "grading", n % 2 == 0 ? "tau" : "parity")},
          {"rank", cfg.bundle.rank()},
          {"t", t},
          {"supertrace", str.values},
          {"tail_bound", tail}};
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"betti",           "signature", "eta",        "rho",
                                                 "spectral-flow",   "aps-index", "interval-cohomology",
                                                 "heat-trace",      "alpha0",    "verify"};
  return names;
}

CommandResult run_command(const std::string& command, const RunConfig* cfg, unsigned seed) {
  CommandResult r;
  if (command == "verify") {
    const auto results = run_verify_suite(seed);
    for (const auto& c : results) r.exit_code = c.pass ? r.exit_code : 2;
    r.output = write_json(to_json(results));
    return r;
  }
  if (cfg == nullptr) throw ConfigError("", "command '" + command + "' needs --config");
  json out;
  if (command == "betti") out = cmd_betti(*cfg);
  else if (command == "signature") out = cmd_signature(*cfg);
  else if (command == "eta") out = cmd_eta(*cfg);
  else if (command == "rho") out = cmd_rho(*cfg);
  else if (command == "spectral-flow") out = cmd_spectral_flow(*cfg);
  else if (command == "aps-index") out = cmd_aps(*cfg);
  else if (command == "interval-cohomology") out = cmd_interval(*cfg);
  else if (command == "alpha0") out = cmd_alpha0(*cfg);
  else if (command == "heat-trace") {
    r.output = cmd_heat(*cfg);
    return r;
  } else {
    throw ConfigError("", "unknown command '" + command + "'");
  }
  out["command"] = command;
  r.output = write_json(out);
  return r;
}

json error_object(const std::exception& e) {
  json err = {{"message", e.what()}};
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    err["code"] = "ConfigInvalid";
    err["pointer"] = ce->pointer();
    err["module"] = ce->module();
    err["operation"] = ce->operation();
  } else if (const auto* te = dynamic_cast<const Error*>(&e)) {
    err["code"] = std::string(to_string(te->code()));
    err["module"] = te->module();
    err["operation"] = te->operation();
  } else {
    err["code"] = "InternalError";
  }
  return {{"error", err}};
}

int exit_code_for(const std::exception& e) {
  if (const auto* te = dynamic_cast<const Error*>(&e)) return te->code() == ErrorCode::ConfigInvalid ? 1 : 2;
  if (dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr) return 1;
  return 2;
}

}  // namespace tsig::cli
