#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "subchain/certify.hpp"
#include "subchain/fmdata.hpp"
#include "subchain/io.hpp"
#include "subchain/losses.hpp"
#include "subchain/maps.hpp"
#include "subchain/preimage.hpp"
#include "subchain/rng.hpp"
#include "subchain/subdiff.hpp"
#include "subchain/version.hpp"

namespace {

using namespace subchain;

struct Options {
  std::string map = "mf";
  std::string loss = "square";
  std::string activation = "shifted_relu";
  std::string mode = "strict";
  std::string case_id;
  std::string point_path, base_path, target_path, dataset_path, params_path,
      labels_path, coeffs_path, out_path;
  double t = 1.0;
  double radius = 0.5;
  double label = 0.0;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  std::size_t samples = 0;  // 0 = per-command default
  std::size_t trials = 0;
  std::size_t restarts = 0;
  std::size_t d = 0;
  std::size_t m = 0, n = 0, h = 0, d0 = 0;
  std::size_t d_lo = 1, d_hi = 0;
};

std::string join_command(int argc, char** argv) {
  std::string cmd = "subchain";
  for (int i = 1; i < argc; ++i) {
    cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

int emit(const Json& report, const std::string& out_path, int code) {
  const std::string text = dump_report(report);
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_text_file(out_path, text);
  return code;
}

MapPoint load_point(MapId id, const std::string& path, const char* what) {
  return map_point_from_json(id, parse_json(read_text_file(path), what), what);
}

SolveMode parse_mode(const std::string& mode) {
  return mode == "strict" ? SolveMode::strict : SolveMode::best_effort;
}

int run_eval(const Options& opt, const std::string& cmd) {
  const MapId id = parse_map_id(opt.map);
  const MapPoint p = load_point(id, opt.point_path, "point");
  Json result{{"map", map_name(id)},
              {"in_dim", input_dim(p)},
              {"out_dim", output_dim(p)},
              {"output", eval_flat(p)}};
  return emit(report_envelope(cmd, opt.seed, Json::object(), std::move(result)),
              opt.out_path, 0);
}

int run_jacobian_check(const Options& opt, const std::string& cmd) {
  constexpr double kStep = 1e-5;
  constexpr double kAdjointTol = 1e-10;
  const MapId id = parse_map_id(opt.map);
  const MapPoint p = load_point(id, opt.point_path, "point");
  const std::size_t samples = opt.samples ? opt.samples : 100;

  const LinearOperator jac = jacobian(p);
  const std::vector<double> w = flatten_point(p);
  const std::uint64_t stream = derive_seed(opt.seed, "jacobian-check");
  double max_rel = 0.0, max_adj = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(stream, s));
    const std::vector<double> v = rng.unit_vector(jac.in_dim);
    std::vector<double> wp = w, wm = w;
    for (std::size_t k = 0; k < w.size(); ++k) {
      wp[k] += kStep * v[k];
      wm[k] -= kStep * v[k];
    }
    const std::vector<double> fp = eval_flat(unflatten_point(p, wp));
    const std::vector<double> fm = eval_flat(unflatten_point(p, wm));
    const std::vector<double> jv = jac.apply(v);
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t k = 0; k < jv.size(); ++k) {
      const double cd = (fp[k] - fm[k]) / (2.0 * kStep);
      diff2 += (cd - jv[k]) * (cd - jv[k]);
      ref2 += jv[k] * jv[k];
    }
    max_rel = std::max(max_rel,
                       std::sqrt(diff2) / std::max(1.0, std::sqrt(ref2)));

    const std::vector<double> u = rng.unit_vector(jac.out_dim);
    const std::vector<double> jtu = jac.apply_adjoint(u);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) lhs += jv[k] * u[k];
    for (std::size_t k = 0; k < v.size(); ++k) rhs += v[k] * jtu[k];
    max_adj =
        std::max(max_adj, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }

  const bool passed = max_rel <= opt.tolerance && max_adj <= kAdjointTol;
  Json result{{"map", map_name(id)},
              {"samples", samples},
              {"max_relative_error", max_rel},
              {"max_adjoint_gap", max_adj},
              {"passed", passed}};
  Json tol{{"central_difference_step", kStep},
           {"relative_tolerance", opt.tolerance},
           {"adjoint_tolerance", kAdjointTol}};
  return emit(
      report_envelope(cmd, opt.seed, std::move(tol), std::move(result)),
      opt.out_path, passed ? 0 : 1);
}

int run_preimage(const Options& opt, const std::string& cmd) {
  const MapId id = parse_map_id(opt.map);
  const SolveMode mode = parse_mode(opt.mode);
  PreimageSolution sol;
  switch (id) {
    case MapId::mf: {
      const DenseMatrix target = matrix_from_json(
          parse_json(read_text_file(opt.target_path), "target"), "target");
      if (!opt.base_path.empty()) {
        const FactorPoint base = std::get<FactorPoint>(
            load_point(MapId::mf, opt.base_path, "base"));
        sol = solve_mf_at(base, target, opt.t, mode);
      } else {
        if (opt.d == 0)
          throw SchemaError("preimage --map mf: --d required without --base");
        sol = solve_mf_origin(target, opt.d, opt.t, mode);
      }
      break;
    }
    case MapId::fm: {
      const auto [d0, y] = pair_values_from_json(
          parse_json(read_text_file(opt.target_path), "target"), "target");
      FMPoint base;
      if (!opt.base_path.empty()) {
        base = std::get<FMPoint>(load_point(MapId::fm, opt.base_path, "base"));
      } else {
        if (opt.d == 0)
          throw SchemaError("preimage --map fm: --d required without --base");
        base.a = opt.coeffs_path.empty()
                     ? PairCoeffs::ones(d0)
                     : pair_coeffs_from_json(
                           parse_json(read_text_file(opt.coeffs_path),
                                      "coeffs"),
                           "coeffs");
        base.P = DenseMatrix(opt.d, d0);
      }
      sol = solve_fm_at(base, y, opt.t, mode);
      break;
    }
    case MapId::cp: {
      const DenseTensor3 target = tensor_from_json(
          parse_json(read_text_file(opt.target_path), "target"), "target");
      if (opt.d == 0) throw SchemaError("preimage --map cp: --d required");
      sol = solve_cp_origin(target.n1, target.n2, target.n3, target, opt.d,
                            opt.t, mode);
      break;
    }
    case MapId::cpdagger: {
      const DenseMatrix target = matrix_from_json(
          parse_json(read_text_file(opt.target_path), "target"), "target");
      if (opt.base_path.empty())
        throw SchemaError("preimage --map cpdagger: --base required");
      const CPDaggerPoint base = std::get<CPDaggerPoint>(
          load_point(MapId::cpdagger, opt.base_path, "base"));
      sol = solve_cp_dagger_at(base, target, opt.t, mode);
      break;
    }
    default:
      throw SchemaError("preimage: supported maps are mf, fm, cp, cpdagger");
  }
  Json tol{{"t", opt.t}, {"mode", opt.mode}};
  return emit(report_envelope(cmd, opt.seed, std::move(tol),
                              preimage_solution_to_json(sol)),
              opt.out_path, 0);
}

int run_chainrule(const Options& opt, const std::string& cmd) {
  const MapId id = parse_map_id(opt.map);
  const MapPoint p = load_point(id, opt.point_path, "point");
  CompositeSpec spec;
  spec.shape = p;
  spec.losses.assign(output_dim(p), make_loss(parse_loss_id(opt.loss), opt.label));
  spec.validate();
  const SubgradientZonotope z = chainrule_upper(spec, flatten_point(p));
  Json result{{"map", map_name(id)},
              {"loss", opt.loss},
              {"label", opt.label},
              {"in_dim", z.dim()},
              {"zonotope", zonotope_to_json(z)}};
  return emit(report_envelope(cmd, opt.seed, Json::object(), std::move(result)),
              opt.out_path, 0);
}

int run_subdiff_fm(const Options& opt, const std::string& cmd) {
  std::size_t d0 = 0;
  std::vector<SparseSample> samples =
      parse_jsonl_dataset(read_text_file(opt.dataset_path), d0);
  const QualifiedDataset dataset = build_qualified(std::move(samples), d0);
  const DenseMatrix p = matrix_from_json(
      parse_json(read_text_file(opt.params_path), "params"), "params");
  const LossId loss_id = parse_loss_id(opt.loss);
  std::vector<ScalarLoss> losses;
  losses.reserve(dataset.samples.size());
  for (const SparseSample& s : dataset.samples)
    losses.push_back(make_loss(loss_id, s.y));
  const FMTrainSubdiff sd = fm_train_subdiff(dataset, p, losses);
  Json result{{"d0", d0},
              {"samples", dataset.samples.size()},
              {"latent_dim", p.rows},
              {"loss", opt.loss},
              {"dimension_certified", sd.dimension_certified},
              {"zonotope", zonotope_to_json(sd.zonotope)}};
  return emit(report_envelope(cmd, opt.seed, Json::object(), std::move(result)),
              opt.out_path, 0);
}

int run_subdiff_gmf(const Options& opt, const std::string& cmd) {
  const GMFPoint g =
      std::get<GMFPoint>(load_point(MapId::gmf, opt.point_path, "point"));
  std::vector<double> labels(g.observed.size(), 0.0);
  if (!opt.labels_path.empty()) {
    const Json lj = parse_json(read_text_file(opt.labels_path), "labels");
    if (!lj.is_array() || lj.size() != g.observed.size())
      throw SchemaError("labels: expected an array with one label per "
                        "observed cell");
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (!lj[k].is_number())
        throw SchemaError("labels: entries must be numbers");
      labels[k] = lj[k].get<double>();
    }
  }
  const LossId loss_id = parse_loss_id(opt.loss);
  std::vector<ScalarLoss> pair_losses;
  pair_losses.reserve(labels.size());
  for (double y : labels) pair_losses.push_back(make_loss(loss_id, y));
  const ScalarLoss activation = make_loss(parse_loss_id(opt.activation));
  const SubgradientZonotope z = gmf_subdiff(g, activation, pair_losses);
  Json result{{"observed", g.observed.size()},
              {"loss", opt.loss},
              {"activation", opt.activation},
              {"in_dim", z.dim()},
              {"zonotope", zonotope_to_json(z)}};
  return emit(report_envelope(cmd, opt.seed, Json::object(), std::move(result)),
              opt.out_path, 0);
}

int run_qualify(const Options& opt, const std::string& cmd) {
  std::size_t d0 = 0;
  const std::vector<SparseSample> samples =
      parse_jsonl_dataset(read_text_file(opt.dataset_path), d0);
  const QualificationReport rep = check_qualification(samples, d0);
  Json result = qualification_to_json(rep);
  result["d0"] = d0;
  result["samples"] = samples.size();
  return emit(report_envelope(cmd, opt.seed, Json::object(), std::move(result)),
              opt.out_path, rep.ok ? 0 : 1);
}

int run_certify(const Options& opt, const std::string& cmd) {
  CertificateReport rep;
  Json tol = Json::object();
  if (opt.case_id == "ex-negative") {
    const std::size_t samples = opt.samples ? opt.samples : 100000;
    rep = certify_chainrule_gap(opt.seed, samples);
    tol = Json{{"value_tolerance", 1e-12}, {"support_tolerance", 1e-12}};
  } else if (opt.case_id == "mf-orthant") {
    const std::size_t trials = opt.trials ? opt.trials : 100000;
    const std::size_t mc = opt.samples ? opt.samples : 1000000;
    rep = certify_mf_orthant(trials, opt.seed, mc);
    tol = Json{{"sign_tolerance", 0.0}, {"mc_standard_errors", 3.0}};
  } else if (opt.case_id == "mf-general") {
    const std::size_t n = opt.n ? opt.n : 3;
    const std::size_t trials = opt.trials ? opt.trials : 3;
    const std::size_t restarts = opt.restarts ? opt.restarts : 200;
    rep = certify_mf_unreachable(n, trials, restarts, opt.seed);
    tol = Json{{"control_tolerance", 1e-8},
               {"membership_tolerance", 1e-12},
               {"floor_slack", 0.99}};
  } else if (opt.case_id == "fm-general") {
    const std::size_t d0 = opt.d0 ? opt.d0 : 3;
    const PairCoeffs a =
        opt.coeffs_path.empty()
            ? PairCoeffs::ones(d0)
            : pair_coeffs_from_json(
                  parse_json(read_text_file(opt.coeffs_path), "coeffs"),
                  "coeffs");
    const std::size_t trials = opt.trials ? opt.trials : 3;
    const std::size_t restarts = opt.restarts ? opt.restarts : 200;
    rep = certify_fm_unreachable(d0, a, trials, restarts, opt.seed);
    tol = Json{{"control_tolerance", 1e-8},
               {"membership_tolerance", 1e-12},
               {"floor_relative_cutoff", 1e-6}};
  } else if (opt.case_id == "neumf-defect") {
    const std::size_t m = opt.m ? opt.m : 3;
    const std::size_t n = opt.n ? opt.n : 3;
    const std::size_t h = opt.h ? opt.h : 2;
    const std::size_t trials = opt.trials ? opt.trials : 1000;
    rep = certify_neumf_defect(m, n, h, trials, opt.seed);
    tol = Json{{"identity_tolerance", 1e-10}};
  } else {
    throw SchemaError("certify: unknown case '" + opt.case_id + "'");
  }
  const int code = rep.verdict == Verdict::confirmed ? 0 : 1;
  return emit(report_envelope(cmd, opt.seed, std::move(tol),
                              certificate_to_json(rep)),
              opt.out_path, code);
}

int run_phase_sweep(const Options& opt, const std::string& cmd) {
  PhaseSweepConfig cfg;
  cfg.map = parse_map_id(opt.map);
  cfg.m = opt.m ? opt.m : 2;
  cfg.n = opt.n ? opt.n : 2;
  cfg.d0 = opt.d0 ? opt.d0 : 3;
  cfg.trials = opt.trials ? opt.trials : 20;
  cfg.restarts = opt.restarts ? opt.restarts : 20;
  cfg.seed = opt.seed;
  cfg.d_lo = opt.d_lo;
  const std::size_t threshold =
      cfg.map == MapId::mf ? std::min(cfg.m, cfg.n) : cfg.d0 - 1;
  cfg.d_hi = opt.d_hi ? opt.d_hi : threshold;
  const PhaseSweepTable table = phase_sweep(cfg);
  bool constructive_ok = true;
  for (const PhaseSweepRow& row : table.rows)
    if (row.at_or_above_threshold && row.rate < 1.0) constructive_ok = false;
  Json tol{{"success_residual", 1e-8}};
  return emit(report_envelope(cmd, opt.seed, std::move(tol),
                              sweep_to_json(table)),
              opt.out_path, constructive_ok ? 0 : 1);
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"factorization-map toolkit: preimage solvers, subdifferential "
               "bounds, unreachability certificates"};
  app.set_version_flag("--version", SUBCHAIN_VERSION);
  app.require_subcommand(1);

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", opt.seed, "master seed (all randomness derives "
                                        "from it)");
    sub->add_option("--out", opt.out_path, "write the JSON report here "
                                           "instead of stdout");
  };

  CLI::App* eval = app.add_subcommand("eval", "evaluate a map at a point");
  eval->add_option("--map", opt.map, "map id")->required();
  eval->add_option("--point", opt.point_path, "point JSON file")->required();
  add_common(eval);

  CLI::App* jac = app.add_subcommand(
      "jacobian-check", "compare the Jacobian against central differences");
  jac->add_option("--map", opt.map)->required();
  jac->add_option("--point", opt.point_path)->required();
  jac->add_option("--samples", opt.samples, "direction count (default 100)");
  jac->add_option("--tolerance", opt.tolerance,
                  "relative tolerance (default 1e-6)");
  add_common(jac);

  CLI::App* pre = app.add_subcommand(
      "preimage", "construct a preimage of a target near a base point");
  pre->add_option("--map", opt.map)->required();
  pre->add_option("--target", opt.target_path, "target JSON file")->required();
  pre->add_option("--base", opt.base_path, "base point JSON file");
  pre->add_option("--coeffs", opt.coeffs_path,
                  "pair coefficients JSON (fm origin, default all ones)");
  pre->add_option("--d", opt.d, "latent dimension for origin solves");
  pre->add_option("--t", opt.t, "trust radius (default 1.0)");
  pre->add_option("--mode", opt.mode, "strict | best-effort")
      ->check(CLI::IsMember({"strict", "best-effort"}));
  add_common(pre);

  CLI::App* chain = app.add_subcommand(
      "chainrule", "assemble the chain-rule upper bound at a point");
  chain->add_option("--map", opt.map)->required();
  chain->add_option("--point", opt.point_path)->required();
  chain->add_option("--loss", opt.loss, "loss applied to every output");
  chain->add_option("--label", opt.label, "loss label/target value");
  add_common(chain);

  CLI::App* sfm = app.add_subcommand(
      "subdiff-fm", "training subdifferential for a qualified dataset");
  sfm->add_option("--dataset", opt.dataset_path, "JSONL dataset")->required();
  sfm->add_option("--params", opt.params_path, "parameter matrix JSON")
      ->required();
  sfm->add_option("--loss", opt.loss, "per-sample loss (label = y)");
  add_common(sfm);

  CLI::App* sgmf = app.add_subcommand(
      "subdiff-gmf", "subdifferential of the generalized product model");
  sgmf->add_option("--point", opt.point_path, "model point JSON")->required();
  sgmf->add_option("--loss", opt.loss, "per-cell loss");
  sgmf->add_option("--labels", opt.labels_path,
                   "JSON array of labels per observed cell (default zeros)");
  sgmf->add_option("--activation", opt.activation, "activation loss id");
  add_common(sgmf);

  CLI::App* qual = app.add_subcommand(
      "qualify", "check the pairwise-overlap qualification of a dataset");
  qual->add_option("--dataset", opt.dataset_path, "JSONL dataset")->required();
  add_common(qual);

  CLI::App* cert = app.add_subcommand("certify", "run a certificate case");
  cert->add_option("--case", opt.case_id, "certificate case")
      ->required()
      ->check(CLI::IsMember({"ex-negative", "mf-orthant", "mf-general",
                             "fm-general", "neumf-defect"}));
  cert->add_option("--samples", opt.samples, "sample count override");
  cert->add_option("--trials", opt.trials, "trial count override");
  cert->add_option("--restarts", opt.restarts, "stress restarts override");
  cert->add_option("--n", opt.n, "matrix size (mf-general) / columns (neumf)");
  cert->add_option("--m", opt.m, "rows (neumf-defect)");
  cert->add_option("--h-dim", opt.h, "tower width (neumf-defect)");
  cert->add_option("--d0", opt.d0, "feature count (fm-general)");
  cert->add_option("--coeffs", opt.coeffs_path,
                   "pair coefficients JSON (fm-general)");
  add_common(cert);

  CLI::App* sweep = app.add_subcommand(
      "phase-sweep", "success rate against latent dimension");
  sweep->add_option("--map", opt.map, "mf | fm")
      ->check(CLI::IsMember({"mf", "fm"}));
  sweep->add_option("--m", opt.m, "rows (mf)");
  sweep->add_option("--n", opt.n, "cols (mf)");
  sweep->add_option("--d0", opt.d0, "feature count (fm)");
  sweep->add_option("--d-lo", opt.d_lo, "lowest latent dimension");
  sweep->add_option("--d-hi", opt.d_hi, "highest latent dimension "
                                        "(default: threshold)");
  sweep->add_option("--trials", opt.trials, "targets per dimension");
  sweep->add_option("--restarts", opt.restarts, "stress restarts per target");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string cmd = join_command(argc, argv);
  try {
    if (app.got_subcommand(eval)) return run_eval(opt, cmd);
    if (app.got_subcommand(jac)) return run_jacobian_check(opt, cmd);
    if (app.got_subcommand(pre)) return run_preimage(opt, cmd);
    if (app.got_subcommand(chain)) return run_chainrule(opt, cmd);
    if (app.got_subcommand(sfm)) return run_subdiff_fm(opt, cmd);
    if (app.got_subcommand(sgmf)) return run_subdiff_gmf(opt, cmd);
    if (app.got_subcommand(qual)) return run_qualify(opt, cmd);
    if (app.got_subcommand(cert)) return run_certify(opt, cmd);
    if (app.got_subcommand(sweep)) return run_phase_sweep(opt, cmd);
  } catch (const AdmissibilityError& e) {
    std::fprintf(stderr, "failed check: %s\n", e.what());
    return 1;
  } catch (const QualificationError& e) {
    std::fprintf(stderr, "failed check: %s\n", e.what());
    return 1;
  } catch (const DegenerateSamplingError& e) {
    std::fprintf(stderr, "failed check: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
