#include "tsig_cli/verify.hpp"

#include <cmath>
#include <random>

#include "tsig/cylinder_aps.hpp"
#include "tsig/error.hpp"
#include "tsig/heat_kernel.hpp"
#include "tsig/signature.hpp"
#include "tsig/spectral.hpp"
#include "tsig_cli/commands.hpp"
#include "tsig_cli/config.hpp"

namespace tsig::cli {

namespace {

using nlohmann::json;

MultiIndex axes(std::initializer_list<int> a, int n) { return MultiIndex::from_axes(std::vector<int>(a), n); }

FluxForm flux3(double h) { return FluxForm::constant(3, axes({1, 2, 3}, 3), h); }

struct Random {
  std::mt19937_64 rng;
  explicit Random(unsigned seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }

  FlatMetric metric(int n) {
    RMat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = 0.3 * normal();
    return FlatMetric(a * a.transpose() + RMat::Identity(n, n));
  }
  FlatBundle bundle(int n, int rank) {
    RMat theta(rank, n);
    for (int a = 0; a < rank; ++a)
      for (int j = 0; j < n; ++j) theta(a, j) = uniform(0.0, 1.0);
    return FlatBundle(theta);
  }
  // Constant flux on every 3-index; phase 1 gives a real form.
  FluxForm flux(int n, cplx phase) {
    FluxForm h(n);
    for (Mask m = 0; m < (Mask{1} << n); ++m)
      if (popcount(m) == 3) h.add_term(std::vector<int>(static_cast<std::size_t>(n), 0), MultiIndex::from_mask(m), phase * normal());
    return h;
  }
};

// Runs a check body, turning library errors into a failed criterion.
CriterionResult guarded(int id, const std::string& name, const std::function<void(CriterionResult&)>& body) {
  CriterionResult r{id, name, false, json::object()};
  try {
    body(r);
  } catch (const Error& e) {
    r.pass = false;
    r.metrics["error"] = {{"code", std::string(to_string(e.code()))},
                          {"module", e.module()},
                          {"operation", e.operation()},
                          {"message", e.what()}};
  }
  return r;
}

CriterionResult betti() {
  return guarded(1, "twisted Betti numbers on T^3", [](CriterionResult& r) {
    const auto g = FlatMetric::identity(3);
    const auto e = FlatBundle::trivial(3);
    const CohomologyResult flat = twisted_cohomology(g, e, FluxForm(3), 3);
    const CohomologyResult twisted = twisted_cohomology(g, e, flux3(0.5), 3);
    r.metrics = {{"h0", {flat.b_even, flat.b_odd}}, {"h_nonzero", {twisted.b_even, twisted.b_odd}}, {"truncation", 3}};
    r.pass = flat.b_even == 4 && flat.b_odd == 4 && twisted.b_even == 3 && twisted.b_odd == 3;
  });
}

CriterionResult exactness(unsigned seed) {
  return guarded(2, "exactness and adjoints", [seed](CriterionResult& r) {
    Random rnd(seed);
    double d2 = 0.0, adj = 0.0;
    int configs = 0;
    for (int i = 0; i < 54; ++i) {
      const int n = 2 + i % 3, rank = 1 + (i / 3) % 3;
      const FlatMetric g = rnd.metric(n);
      const FlatBundle e = rnd.bundle(n, rank);
      const FluxForm h = n >= 3 ? rnd.flux(n, std::polar(1.0, rnd.uniform(0.0, 2.0 * kPi))) : FluxForm(n);
      const BlockOperator d = build_twisted_differential(g, e, h, 1);
      for (const Block& b : d.blocks) d2 = std::max(d2, max_abs(b.matrix * b.matrix));
      try {
        adj = std::max(adj, adjoint_twisted_differential(g, e, h, 1).defect);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::AdjointMismatch) throw;
        adj = std::max(adj, 1.0);
      }
      ++configs;
    }
    r.metrics = {{"configs", configs}, {"square_max", d2}, {"adjoint_defect", adj},
                 {"square_tolerance", 1e-12}, {"adjoint_tolerance", 1e-10}};
    r.pass = configs >= 50 && d2 < 1e-12 && adj < 1e-10;
  });
}

CriterionResult scaling(unsigned seed) {
  return guarded(3, "scaling conjugation", [seed](CriterionResult& r) {
    Random rnd(seed + 1);
    double worst = 0.0;
    const cplx lambdas[] = {1.0, kI, -1.0, std::polar(1.0, kPi / 3.0)};
    for (int n : {3, 4}) {
      const FlatMetric g = rnd.metric(n);
      const FlatBundle e = rnd.bundle(n, 2);
      const FluxForm h = rnd.flux(n, cplx{0.6, 0.8});
      for (cplx l : lambdas) worst = std::max(worst, scaling_conjugation_check(g, e, h, l, 1));
    }
    r.metrics = {{"defect", worst}, {"tolerance", 1e-12}};
    r.pass = worst < 1e-12;
  });
}

CriterionResult gauge(unsigned seed) {
  return guarded(4, "gauge intertwining", [seed](CriterionResult& r) {
    Random rnd(seed + 2);
    const FlatMetric g = FlatMetric::identity(3);
    const FlatBundle e(RMat::Constant(1, 3, 0.25));
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Form b(Ambient::scalar(g, 1));
      for (int term = 0; term < 3; ++term) {
        Mode m{{static_cast<int>(rnd.rng() % 3) - 1, static_cast<int>(rnd.rng() % 3) - 1,
                static_cast<int>(rnd.rng() % 3) - 1},
               0};
        const Mask pair = std::vector<Mask>{0b011, 0b101, 0b110}[rnd.rng() % 3];
        b.add(m, MultiIndex::from_mask(pair), {rnd.normal(), rnd.normal()});
      }
      const GaugeResult res = gauge_transform(g, e, b, flux3(0.7), 1, 4, seed + static_cast<unsigned>(trial));
      worst = std::max(worst, res.defect);
    }
    r.metrics = {{"defect", worst}, {"tolerance", 1e-10}, {"potentials", 10}};
    r.pass = worst < 1e-10;
  });
}

CriterionResult anticommutation(unsigned seed) {
  return guarded(5, "anticommutation criterion", [seed](CriterionResult& r) {
    Random rnd(seed + 3);
    const FlatMetric g = rnd.metric(4);
    const FlatBundle e = rnd.bundle(4, 2);
    const FluxForm h = rnd.flux(4, 1.0);  // H_3 = i^2 * real
    const AdmissibilityReport adm = anticommutation_defect(g, e, h, 1);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 10; ++j) {
      const double phi = kPi / 6.0 + j * (2.0 * kPi / 3.0) / 9.0;  // |sin phi| >= 1/2
      const AdmissibilityReport bad = anticommutation_defect(g, e, h.scaled(std::polar(1.0, phi)), 1);
      min_ratio = std::min(min_ratio, bad.defect / bad.flux_norm);
    }
    r.metrics = {{"admissible_defect", adm.defect}, {"admissible_tolerance", 1e-10},
                 {"inadmissible_min_ratio", min_ratio}, {"inadmissible_threshold", 0.05}};
    r.pass = adm.admissible && adm.defect < 1e-10 && min_ratio > 0.05;
  });
}

CriterionResult signatures(unsigned seed) {
  return guarded(6, "signature identities", [seed](CriterionResult& r) {
    Random rnd(seed + 4);
    bool ok = true;
    json rows = json::array();
    for (int n : {2, 4})
      for (int rank = 1; rank <= 3; ++rank) {
        const FlatMetric g = rnd.metric(n);
        RMat theta = RMat::Zero(rank, n);
        for (int a = 1; a < rank; ++a) theta(a, 0) = 0.5;  // keeps cohomology in the sample
        const FlatBundle e(theta);
        const FluxForm h = n == 4 ? rnd.flux(4, kI) : FluxForm(n);  // purely imaginary
        const SignatureResult form = hermitian_form(g, e, h, 1.0, 1);
        const SignatureResult split = harmonic_splitting_signature(g, e, h, 1);
        const SignatureResult line = hermitian_form(g, FlatBundle::trivial(n), h, 1.0, 1);
        const IndexSplitReport idx = index_split_check(g, e, h, 1);
        const bool row_ok = form.signature == split.signature && form.signature == rank * line.signature &&
                            form.signature == 0 && idx.even_identity && idx.odd_identity;
        ok = ok && row_ok;
        rows.push_back({{"dim", n}, {"rank", rank}, {"form", form.signature}, {"splitting", split.signature},
                        {"line", line.signature}, {"index_even", idx.index_even}, {"index_odd", idx.index_odd}});
      }
    r.metrics = {{"configs", rows}};
    r.pass = ok;
  });
}

CriterionResult duality() {
  return guarded(7, "Kunneth and Poincare duality", [](CriterionResult& r) {
    bool ok = true;
    const FlatMetric g3 = FlatMetric::identity(3);
    const KunnethFactor a{g3, FlatBundle::trivial(3), flux3(0.5)};
    const KunnethFactor b{FlatMetric::identity(1), FlatBundle::trivial(1), FluxForm(1)};
    RMat t2(2, 2);
    t2 << 0.0, 0.0, 0.5, 0.25;
    const KunnethFactor c{FlatMetric::identity(2), FlatBundle(t2), FluxForm(2)};
    const KunnethFactor d{FlatMetric::identity(2), FlatBundle::trivial(2), FluxForm(2)};
    json kun = json::array();
    for (const auto& [x, y] : {std::pair{&a, &b}, std::pair{&c, &d}}) {
      const KunnethReport k = kunneth_check(*x, *y, 1);
      ok = ok && k.dimensions_match && k.cocycle_defect < 1e-10;
      kun.push_back({{"betti", {k.b_even, k.b_odd}}, {"expected", {k.expected_even, k.expected_odd}},
                     {"cocycle_defect", k.cocycle_defect}});
    }
    json poi = json::array();
    const FluxForm h4 = FluxForm::constant(4, axes({1, 2, 3}, 4), cplx{0.0, 0.4});
    const std::vector<std::tuple<FlatMetric, FlatBundle, FluxForm>> closed = {
        {g3, FlatBundle::trivial(3), flux3(0.5)},
        {FlatMetric::identity(4), FlatBundle::trivial(4), h4},
        {FlatMetric::identity(2), FlatBundle(t2), FluxForm(2)}};
    for (const auto& [g, e, h] : closed) {
      const PoincareReport p = poincare_pairing(g, e, h, 1);
      ok = ok && p.nondegenerate && p.dimensions_match;
      poi.push_back({{"sigma_min", p.sigma_min}, {"dims", {p.dim_even, p.dim_odd}},
                     {"dual_dims", {p.dual_dim_even, p.dual_dim_odd}}});
    }
    r.metrics = {{"kunneth", kun}, {"poincare", poi}, {"sigma_tolerance", 1e-8}};
    r.pass = ok;
  });
}

CriterionResult eta_flat() {
  return guarded(8, "eta at H = 0", [](CriterionResult& r) {
    bool ok = true;
    json rows = json::array();
    for (const auto& [n, k] : {std::pair{3, 3}, std::pair{5, 1}}) {
      const OddSignatureOperator op(FlatMetric::identity(n), FlatBundle::trivial(n), FluxForm(n), k);
      const EtaEstimate e = eta_invariant(op, EtaMethod::ModeSymmetryExact);
      ok = ok && std::abs(e.value) <= e.error_estimate + 0.0 && e.error_estimate < 1e-6;
      rows.push_back({{"dim", n}, {"eta", e.value}, {"error_estimate", e.error_estimate}});
    }
    r.metrics = {{"configs", rows}, {"error_tolerance", 1e-6}};
    r.pass = ok;
  });
}

CriterionResult flow_relation() {
  return guarded(9, "spectral flow and eta slope", [](CriterionResult& r) {
    const FlatMetric g = FlatMetric::identity(3);
    const FlatBundle e = FlatBundle::trivial(3);
    const double eta0 = eta_invariant(OddSignatureOperator(g, e, FluxForm(3), 6)).value;
    std::vector<double> hs = {0.2, 0.4, 0.6, 0.8}, ys;
    json rows = json::array();
    for (double h : hs) {
      const double eta = eta_invariant(OddSignatureOperator(g, e, flux3(h), 6)).value;
      const int sf = spectral_flow(g, e, flux3(h), 6, 64).flow;
      ys.push_back(eta - eta0 - 2.0 * sf);
      rows.push_back({{"h", h}, {"eta", eta}, {"spectral_flow", sf}, {"difference", ys.back()}});
    }
    const double mh = (hs[0] + hs[1] + hs[2] + hs[3]) / 4.0, my = (ys[0] + ys[1] + ys[2] + ys[3]) / 4.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      sxy += (hs[i] - mh) * (ys[i] - my);
      sxx += (hs[i] - mh) * (hs[i] - mh);
    }
    const double slope = sxy / sxx, target = 1.0 / (2.0 * kPi * kPi);
    r.metrics = {{"points", rows}, {"slope", slope}, {"target", target}, {"relative_tolerance", 0.05},
                 {"slope_sign", slope > 0 ? 1 : -1}};
    r.pass = std::abs(std::abs(slope) - target) < 0.05 * target;
  });
}

CriterionResult rho_independence() {
  return guarded(10, "rho metric independence", [](CriterionResult& r) {
    RMat theta = RMat::Zero(1, 3);
    theta(0, 0) = 1.0 / 3.0;
    const FlatBundle e(theta);
    RMat g1 = RMat::Zero(3, 3);
    g1.diagonal() << 1.44, 1.0, 0.81;
    const EtaEstimate r0 = rho_invariant(FlatMetric::identity(3), e, flux3(0.5), 4);
    const EtaEstimate r1 = rho_invariant(FlatMetric(g1), e, flux3(0.5), 4);
    const double combined = std::hypot(r0.error_estimate, r1.error_estimate);
    r.metrics = {{"rho_identity", r0.value}, {"rho_diagonal", r1.value}, {"difference", std::abs(r0.value - r1.value)},
                 {"combined_error", combined}, {"method", r0.method}};
    r.pass = std::abs(r0.value - r1.value) < combined;
  });
}

CriterionResult aps() {
  return guarded(11, "APS cylinder index", [](CriterionResult& r) {
    bool ok = true;
    json rows = json::array();
    for (double h : {0.0, 0.5}) {
      std::optional<int> first;
      for (double length : {0.5, 1.0, 2.0}) {
        const FluxForm flux = h == 0.0 ? FluxForm(3) : flux3(h);
        const CylinderProblem p{FlatMetric::identity(3), FlatBundle::trivial(3), flux, length, 2};
        const APSIndexResult a = aps_cylinder_index(p);
        const double bid = boundary_identification_check(p).max();
        const bool row = a.index + a.dim_ker_boundary == 0 && a.index == a.h_plus - a.h_minus - a.h_infinity &&
                         (!first || *first == a.index) && bid < 1e-10;
        if (!first) first = a.index;
        ok = ok && row;
        rows.push_back({{"h", h}, {"length", length}, {"index", a.index}, {"dim_ker_boundary", a.dim_ker_boundary},
                        {"h_infinity", a.h_infinity}, {"boundary_identification_defect", bid}});
      }
    }
    r.metrics = {{"cylinders", rows}};
    r.pass = ok;
  });
}

CriterionResult heat() {
  return guarded(12, "heat traces", [](CriterionResult& r) {
    bool ok = true;
    std::vector<double> t;
    for (int j = 0; j <= 8; ++j) t.push_back(0.05 * std::pow(2.0, 0.5 * j));
    t.push_back(1.0);
    double worst = 0.0;
    for (int n = 1; n <= 3; ++n)
      for (bool holonomy : {false, true}) {
        const FlatBundle e = holonomy ? FlatBundle(RMat::Constant(1, n, 1.0 / 3.0)) : FlatBundle::trivial(n);
        const HeatTrace a = heat_trace_eigen(FlatMetric::identity(n), e, FluxForm(n), t, 8);
        const HeatTrace b = heat_trace_images(FlatMetric::identity(n), e, t);
        for (std::size_t i = 0; i < t.size(); ++i)
          worst = std::max(worst, std::abs(a.values[i] - b.values[i]) / std::abs(b.values[i]));
      }
    ok = ok && worst < 1e-12;

    const std::vector<double> grid = default_heat_grid();
    const McKeanSingerReport ms3 =
        mckean_singer_check(FlatMetric::identity(3), FlatBundle::trivial(3), flux3(0.5), grid, 7);
    const McKeanSingerReport ms1 =
        mckean_singer_check(FlatMetric::identity(1), FlatBundle(RMat::Constant(1, 1, 1.0 / 3.0)), FluxForm(1), grid, 7);
    const double variance = std::max(ms3.variance, ms1.variance);
    ok = ok && variance < 1e-8;

    double alpha_abs = 0.0, residual = 0.0;
    json alpha_rows = json::array();
    for (int n : {2, 4}) {
      double line = 0.0;
      for (int rank = 1; rank <= 3; ++rank) {
        const HeatTrace str = heat_trace_eigen(FlatMetric::identity(n), FlatBundle::trivial(n, rank), FluxForm(n),
                                               grid, n == 2 ? 8 : 5, HeatGrading::Tau);
        const Alpha0Result a = alpha0_extract(str.t, str.values, n);
        if (rank == 1) line = a.alpha0;
        alpha_abs = std::max(alpha_abs, std::abs(a.alpha0));
        residual = std::max(residual, a.residual);
        ok = ok && std::abs(a.alpha0) <= std::max(a.residual, 1e-12) + 1e-6 && a.residual < 1e-6 &&
             std::abs(a.alpha0 - rank * line) < 1e-6;
        alpha_rows.push_back({{"dim", n}, {"rank", rank}, {"alpha0", a.alpha0}, {"residual", a.residual}});
      }
    }
    // Synthetic fixture: t^{-1/2} + 7 scaled by the rank.
    double synthetic = 0.0;
    for (int rank = 1; rank <= 3; ++rank) {
      std::vector<double> v;
      for (double s : grid) v.push_back(rank * (1.0 / std::sqrt(s) + 7.0));
      synthetic = std::max(synthetic, std::abs(alpha0_extract(grid, v, 1).alpha0 - 7.0 * rank));
    }
    ok = ok && synthetic < 1e-8;
    const ImageRemainderFit fit = image_remainder_fit(FlatMetric::identity(3), FlatBundle::trivial(3));
    ok = ok && fit.bounded;
    r.metrics = {{"eigen_vs_images_relative", worst}, {"eigen_vs_images_tolerance", 1e-12},
                 {"mckean_singer_variance", variance}, {"variance_tolerance", 1e-8},
                 {"alpha0", alpha_rows}, {"alpha0_max_abs", alpha_abs}, {"alpha0_residual", residual},
                 {"synthetic_rank_error", synthetic}, {"remainder_decay", fit.decay},
                 {"remainder_required", fit.required_decay}};
    r.pass = ok;
  });
}

CriterionResult determinism(unsigned seed) {
  return guarded(13, "determinism across thread counts", [seed](CriterionResult& r) {
    json doc = {{"manifold", {{"dim", 3}, {"metric", {1.44, 0, 0, 0, 1, 0, 0, 0, 0.81}}}},
                {"bundle", {{"rank", 1}, {"holonomy", {{1.0 / 3.0, 0.0, 0.0}}}}},
                {"flux", {{"components", {{{"degree", 3}, {"terms", {{{"multi_index", {1, 2, 3}}, {"re", 0.5}, {"im", 0.0}}}}}}}}},
                {"truncation", 3}};
    const RunConfig cfg = parse_config(doc);
    const unsigned saved = thread_count();
    bool same = true;
    for (const char* cmd : {"betti", "eta", "spectral-flow", "aps-index"}) {
      set_thread_count(1);
      const std::string a = run_command(cmd, &cfg, seed).output;
      set_thread_count(4);
      const std::string b = run_command(cmd, &cfg, seed).output;
      same = same && a == b;
    }
    set_thread_count(saved);
    r.metrics = {{"commands", {"betti", "eta", "spectral-flow", "aps-index"}}, {"identical", same}};
    r.pass = same;
  });
}

}  // namespace

CriterionResult run_criterion(int id, unsigned seed) {
  switch (id) {
    case 1: return betti();
    case 2: return exactness(seed);
    case 3: return scaling(seed);
    case 4: return gauge(seed);
    case 5: return anticommutation(seed);
    case 6: return signatures(seed);
    case 7: return duality();
    case 8: return eta_flat();
    case 9: return flow_relation();
    case 10: return rho_independence();
    case 11: return aps();
    case 12: return heat();
    case 13: return determinism(seed);
    default: throw ConfigError("", "criterion id must lie in 1.." + std::to_string(kCriterionCount));
  }
}

std::vector<CriterionResult> run_verify_suite(unsigned seed) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) out.push_back(run_criterion(id, seed));
  return out;
}

json to_json(const std::vector<CriterionResult>& results) {
  json list = json::array();
  int passed = 0;
  for (const auto& c : results) {
    list.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"metrics", c.metrics}});
    passed += c.pass ? 1 : 0;
  }
  return {{"command", "verify"}, {"criteria", list}, {"passed", passed}, {"total", static_cast<int>(results.size())}};
}

}  // namespace tsig::cli
