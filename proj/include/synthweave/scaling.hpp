#pragma once

// Scaling-law fitting: rectified L(D) = B/(D_l + D^beta) + E, its
// marginal form B/D^beta + E, and the two-variable power law
// A/N^alpha + B/D^beta + E.
//
// All fits minimize the sum of squared log-space residuals
// sum_i (log L_i - log Lhat_i)^2 with a derivative-free Nelder-Mead
// simplex run from a fixed multi-start grid.  Box constraints are
// enforced by clamped transforms of the search variables, so the simplex
// itself is unconstrained.  Everything is deterministic: starts are
// evaluated in grid order and ties keep the earlier (lower-beta) start.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "synthweave/jsonl.hpp"

namespace synthweave {

struct DataPoint {
  double tokens = 0.0;      // D
  double error_rate = 0.0;  // L, fraction in (0,1)
  double params = 0.0;      // N; 0 = absent (power-law fits only)
};

inline void validate_points(const std::vector<DataPoint>& pts) {
  for (const DataPoint& p : pts) {
    if (!(p.tokens > 0.0))
      throw ArgumentError("data point: tokens must be > 0");
    if (!(p.error_rate > 0.0) || !(p.error_rate < 1.0))
      throw ArgumentError("data point: error_rate must lie in (0,1)");
    if (p.params < 0.0)
      throw ArgumentError("data point: params must be positive when given");
  }
}

struct RectifiedFit {
  double B = 0.0;
  double D_l = 0.0;
  double beta = 0.0;
  double E = 0.0;
  double rmse_log = 0.0;
  int n_points = 0;
};

struct MarginalFit {
  double B = 0.0;
  double beta = 0.0;
  double E = 0.0;
  double rmse_log = 0.0;
  int n_points = 0;
};

struct PowerLawFit {
  double A = 0.0;
  double alpha = 0.0;
  double B = 0.0;
  double beta = 0.0;
  double E = 0.0;
  double rmse_log = 0.0;
  int n_points = 0;
};

namespace detail {

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

// exp with a guarded argument (no overflow to inf).
inline double safe_exp(double x) { return std::exp(clamp(x, -700.0, 700.0)); }

// x^p for x > 0 via exp(p log x), guarded.
inline double safe_pow(double x, double p) { return safe_exp(p * std::log(x)); }

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
};

// Standard reflection/expansion/contraction/shrink simplex.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& steps,
    int max_iter = 2000) {
  std::size_t n = x0.size();
  std::vector<std::vector<double>> pts;
  pts.push_back(x0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p = x0;
    p[i] += steps[i];
    pts.push_back(std::move(p));
  }
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  auto sort_simplex = [&] {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       return vals[a] < vals[b];
                     });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = std::move(pts[idx[i]]);
      v2[i] = vals[idx[i]];
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  sort_simplex();
  for (int it = 0; it < max_iter; ++it) {
    if (vals[n] - vals[0] <= 1e-15 * (std::fabs(vals[0]) + 1e-15)) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    for (std::size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

    auto combine = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + coef * (centroid[j] - pts[n][j]);
      return p;
    };

    std::vector<double> xr = combine(1.0);
    double fr = f(xr);
    bool shrink = false;
    if (fr < vals[0]) {
      std::vector<double> xe = combine(2.0);
      double fe = f(xe);
      if (fe < fr) {
        pts[n] = std::move(xe);
        vals[n] = fe;
      } else {
        pts[n] = std::move(xr);
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = std::move(xr);
      vals[n] = fr;
    } else if (fr < vals[n]) {
      std::vector<double> xc = combine(0.5);  // outside contraction
      double fc = f(xc);
      if (fc <= fr) {
        pts[n] = std::move(xc);
        vals[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      std::vector<double> xc = combine(-0.5);  // inside contraction
      double fc = f(xc);
      if (fc < vals[n]) {
        pts[n] = std::move(xc);
        vals[n] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
          pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
        vals[i] = f(pts[i]);
      }
    }
    sort_simplex();
  }

  NelderMeadResult out;
  out.x = pts[0];
  out.value = vals[0];
  return out;
}

inline double min_error(const std::vector<DataPoint>& pts) {
  double m = 1.0;
  for (const DataPoint& p : pts) m = std::min(m, p.error_rate);
  return m;
}

inline double min_tokens(const std::vector<DataPoint>& pts) {
  double m = std::numeric_limits<double>::infinity();
  for (const DataPoint& p : pts) m = std::min(m, p.tokens);
  return m;
}

}  // namespace detail

// ----------------------------------------------------------- rectified

inline double predict_rectified(double B, double D_l, double beta, double E,
                                double tokens) {
  return B / (D_l + detail::safe_pow(tokens, beta)) + E;
}

inline RectifiedFit fit_rectified(const std::vector<DataPoint>& points,
                                  std::uint64_t seed = 0) {
  (void)seed;  // the fit is deterministic; seed kept for interface stability
  if (points.size() < 4)
    throw ArgumentError("fit_rectified: need at least 4 points");
  validate_points(points);
  bool all_equal = true;
  for (const DataPoint& p : points)
    if (p.tokens != points[0].tokens) all_equal = false;
  if (all_equal)
    throw ArgumentError("fit_rectified: token values must not all be equal");

  const double min_l = detail::min_error(points);
  const double min_d = detail::min_tokens(points);
  const double e_cap = 0.999 * min_l;

  // Search variables: x = (ln B, log1p D_l, beta, E) with clamps applied
  // inside the objective.
  auto unpack = [&](const std::vector<double>& x, double& B, double& D_l,
                    double& beta, double& E) {
    B = detail::safe_exp(x[0]);
    D_l = std::max(0.0, std::expm1(detail::clamp(x[1], -700.0, 700.0)));
    beta = detail::clamp(x[2], 1e-6, 2.0);
    E = detail::clamp(x[3], 0.0, e_cap);
  };
  auto objective = [&](const std::vector<double>& x) {
    double B, D_l, beta, E;
    unpack(x, B, D_l, beta, E);
    double s = 0.0;
    for (const DataPoint& p : points) {
      double pred = predict_rectified(B, D_l, beta, E, p.tokens);
      if (!(pred > 0.0) || !std::isfinite(pred)) return 1e300;
      double r = std::log(p.error_rate) - std::log(pred);
      s += r * r;
    }
    return s;
  };

  const double beta_starts[] = {0.2, 0.4, 0.6, 0.8};
  const double e_starts[] = {0.0, 0.5 * min_l, 0.9 * min_l};
  const double dl_starts[] = {0.0, min_d, 10.0 * min_d};

  detail::NelderMeadResult best;
  bool improved = false;
  for (double b0 : beta_starts) {
    for (double e0 : e_starts) {
      for (double dl0 : dl_starts) {
        double B0 = (points[0].error_rate - e0) *
                    (dl0 + detail::safe_pow(points[0].tokens, b0));
        if (!(B0 > 0.0)) B0 = 1e-6;
        std::vector<double> x0 = {std::log(B0), std::log1p(dl0), b0, e0};
        std::vector<double> steps = {0.5, 1.0, 0.1, 0.05 * min_l};
        double f0 = objective(x0);
        detail::NelderMeadResult r = detail::nelder_mead(objective, x0, steps);
        if (r.value < f0) improved = true;
        if (r.value < best.value) best = std::move(r);
      }
    }
  }
  if (!std::isfinite(best.value))
    throw FitError("fit_rectified: all starts produced invalid objectives");
  if (!improved && best.value > 1e-30)
    throw FitError("fit_rectified: optimizer failed to improve on any start");

  RectifiedFit fit;
  unpack(best.x, fit.B, fit.D_l, fit.beta, fit.E);
  fit.rmse_log = std::sqrt(best.value / static_cast<double>(points.size()));
  fit.n_points = static_cast<int>(points.size());
  return fit;
}

inline double predict(const RectifiedFit& fit, double tokens) {
  if (!(tokens > 0.0)) throw ArgumentError("predict: tokens must be > 0");
  return predict_rectified(fit.B, fit.D_l, fit.beta, fit.E, tokens);
}

// Closed-form inverse: the token count at which the fitted curve crosses
// target_error.
inline double tokens_for_target(const RectifiedFit& fit, double target_error) {
  if (target_error <= fit.E)
    throw FitError("tokens_for_target: target error " +
                   std::to_string(target_error) +
                   " is unreachable (asymptote E = " + std::to_string(fit.E) +
                   ")");
  double x = fit.B / (target_error - fit.E) - fit.D_l;
  if (!(x > 0.0))
    throw FitError("tokens_for_target: target error above the fitted "
                   "curve's range");
  return detail::safe_exp(std::log(x) / fit.beta);
}

// ------------------------------------------------------------ marginal

inline double predict_marginal(double B, double beta, double E,
                               double tokens) {
  return B / detail::safe_pow(tokens, beta) + E;
}

inline MarginalFit fit_marginal(const std::vector<DataPoint>& points,
                                std::uint64_t seed = 0) {
  (void)seed;
  if (points.size() < 3)
    throw ArgumentError("fit_marginal: need at least 3 points");
  validate_points(points);
  bool all_equal = true;
  for (const DataPoint& p : points)
    if (p.tokens != points[0].tokens) all_equal = false;
  if (all_equal)
    throw ArgumentError("fit_marginal: token values must not all be equal");

  const double min_l = detail::min_error(points);
  const double e_cap = 0.999 * min_l;

  auto unpack = [&](const std::vector<double>& x, double& B, double& beta,
                    double& E) {
    B = detail::safe_exp(x[0]);
    beta = detail::clamp(x[1], 1e-6, 2.0);
    E = detail::clamp(x[2], 0.0, e_cap);
  };
  auto objective = [&](const std::vector<double>& x) {
    double B, beta, E;
    unpack(x, B, beta, E);
    double s = 0.0;
    for (const DataPoint& p : points) {
      double pred = predict_marginal(B, beta, E, p.tokens);
      if (!(pred > 0.0) || !std::isfinite(pred)) return 1e300;
      double r = std::log(p.error_rate) - std::log(pred);
      s += r * r;
    }
    return s;
  };

  const double beta_starts[] = {0.2, 0.4, 0.6, 0.8};
  const double e_starts[] = {0.0, 0.5 * min_l, 0.9 * min_l};

  detail::NelderMeadResult best;
  bool improved = false;
  for (double b0 : beta_starts) {
    for (double e0 : e_starts) {
      double B0 = (points[0].error_rate - e0) *
                  detail::safe_pow(points[0].tokens, b0);
      if (!(B0 > 0.0)) B0 = 1e-6;
      std::vector<double> x0 = {std::log(B0), b0, e0};
      std::vector<double> steps = {0.5, 0.1, 0.05 * min_l};
      double f0 = objective(x0);
      detail::NelderMeadResult r = detail::nelder_mead(objective, x0, steps);
      if (r.value < f0) improved = true;
      if (r.value < best.value) best = std::move(r);
    }
  }
  if (!std::isfinite(best.value))
    throw FitError("fit_marginal: all starts produced invalid objectives");
  if (!improved && best.value > 1e-30)
    throw FitError("fit_marginal: optimizer failed to improve on any start");

  MarginalFit fit;
  unpack(best.x, fit.B, fit.beta, fit.E);
  fit.rmse_log = std::sqrt(best.value / static_cast<double>(points.size()));
  fit.n_points = static_cast<int>(points.size());
  return fit;
}

inline double predict(const MarginalFit& fit, double tokens) {
  if (!(tokens > 0.0)) throw ArgumentError("predict: tokens must be > 0");
  return predict_marginal(fit.B, fit.beta, fit.E, tokens);
}

// ----------------------------------------------------------- power law

inline double predict_power(double A, double alpha, double B, double beta,
                            double E, double n_params, double tokens) {
  return A / detail::safe_pow(n_params, alpha) +
         B / detail::safe_pow(tokens, beta) + E;
}

inline PowerLawFit fit_powerlaw(const std::vector<DataPoint>& points,
                                std::uint64_t seed = 0) {
  (void)seed;
  if (points.size() < 6)
    throw ArgumentError("fit_powerlaw: need at least 6 points");
  validate_points(points);
  std::set<double> distinct_n, distinct_d;
  for (const DataPoint& p : points) {
    if (!(p.params > 0.0))
      throw ArgumentError("fit_powerlaw: every point needs params > 0");
    distinct_n.insert(p.params);
    distinct_d.insert(p.tokens);
  }
  if (distinct_n.size() < 2)
    throw ArgumentError("fit_powerlaw: need at least 2 distinct params values");
  if (distinct_d.size() < 3)
    throw ArgumentError("fit_powerlaw: need at least 3 distinct token values");

  const double min_l = detail::min_error(points);
  const double e_cap = 0.999 * min_l;

  auto unpack = [&](const std::vector<double>& x, double& A, double& alpha,
                    double& B, double& beta, double& E) {
    A = detail::safe_exp(x[0]);
    alpha = detail::clamp(x[1], 1e-6, 2.0);
    B = detail::safe_exp(x[2]);
    beta = detail::clamp(x[3], 1e-6, 2.0);
    E = detail::clamp(x[4], 0.0, e_cap);
  };
  auto objective = [&](const std::vector<double>& x) {
    double A, alpha, B, beta, E;
    unpack(x, A, alpha, B, beta, E);
    double s = 0.0;
    for (const DataPoint& p : points) {
      double pred = predict_power(A, alpha, B, beta, E, p.params, p.tokens);
      if (!(pred > 0.0) || !std::isfinite(pred)) return 1e300;
      double r = std::log(p.error_rate) - std::log(pred);
      s += r * r;
    }
    return s;
  };

  const double exp_starts[] = {0.2, 0.5, 0.8};
  const double e_starts[] = {0.0, 0.5 * min_l, 0.9 * min_l};

  detail::NelderMeadResult best;
  bool improved = false;
  for (double a0 : exp_starts) {
    for (double b0 : exp_starts) {
      for (double e0 : e_starts) {
        double half = 0.5 * (points[0].error_rate - e0);
        double A0 = half * detail::safe_pow(points[0].params, a0);
        double B0 = half * detail::safe_pow(points[0].tokens, b0);
        if (!(A0 > 0.0)) A0 = 1e-6;
        if (!(B0 > 0.0)) B0 = 1e-6;
        std::vector<double> x0 = {std::log(A0), a0, std::log(B0), b0, e0};
        std::vector<double> steps = {0.5, 0.1, 0.5, 0.1, 0.05 * min_l};
        double f0 = objective(x0);
        detail::NelderMeadResult r = detail::nelder_mead(objective, x0, steps);
        if (r.value < f0) improved = true;
        if (r.value < best.value) best = std::move(r);
      }
    }
  }
  if (!std::isfinite(best.value))
    throw FitError("fit_powerlaw: all starts produced invalid objectives");
  if (!improved && best.value > 1e-30)
    throw FitError("fit_powerlaw: optimizer failed to improve on any start");

  PowerLawFit fit;
  unpack(best.x, fit.A, fit.alpha, fit.B, fit.beta, fit.E);
  fit.rmse_log = std::sqrt(best.value / static_cast<double>(points.size()));
  fit.n_points = static_cast<int>(points.size());
  return fit;
}

inline double predict(const PowerLawFit& fit, double n_params, double tokens) {
  if (!(tokens > 0.0) || !(n_params > 0.0))
    throw ArgumentError("predict: params and tokens must be > 0");
  return predict_power(fit.A, fit.alpha, fit.B, fit.beta, fit.E, n_params,
                       tokens);
}

// --------------------------------------------------------------- I/O

// Reads observation points from JSONL ({"tokens": ..., "error_rate": ...,
// "params"?: ...}) or, when the path ends in .csv, from CSV with a
// `tokens,error_rate[,params]` header.
inline std::vector<DataPoint> read_points(const std::string& path) {
  std::vector<DataPoint> pts;
  bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  if (!csv) {
    for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
      std::string where = path + ":" + std::to_string(lineno);
      DataPoint p;
      p.tokens = require_number(rec, "tokens", where);
      p.error_rate = require_number(rec, "error_rate", where);
      if (rec.contains("params")) p.params = rec["params"].get<double>();
      pts.push_back(p);
    });
  } else {
    std::string content = read_text_file(path);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      std::size_t nl = content.find('\n', pos);
      if (nl == std::string::npos) nl = content.size();
      std::string line = content.substr(pos, nl - pos);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
      if (nl == content.size()) break;
      pos = nl + 1;
    }
    if (lines.empty()) throw ParseError(path + ": empty csv");
    auto split = [](const std::string& s) {
      std::vector<std::string> out;
      std::size_t p = 0;
      while (p <= s.size()) {
        std::size_t c = s.find(',', p);
        if (c == std::string::npos) c = s.size();
        out.push_back(s.substr(p, c - p));
        if (c == s.size()) break;
        p = c + 1;
      }
      return out;
    };
    std::vector<std::string> header = split(lines[0]);
    int tokens_col = -1, error_col = -1, params_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == "tokens") tokens_col = static_cast<int>(i);
      if (header[i] == "error_rate") error_col = static_cast<int>(i);
      if (header[i] == "params") params_col = static_cast<int>(i);
    }
    if (tokens_col < 0 || error_col < 0)
      throw ParseError(path + ": csv header must contain tokens,error_rate");
    for (std::size_t li = 1; li < lines.size(); ++li) {
      std::vector<std::string> cells = split(lines[li]);
      std::string where = path + ":" + std::to_string(li + 1);
      if (cells.size() < header.size())
        throw ParseError(where + ": too few csv columns");
      DataPoint p;
      try {
        p.tokens = std::stod(cells[static_cast<std::size_t>(tokens_col)]);
        p.error_rate = std::stod(cells[static_cast<std::size_t>(error_col)]);
        if (params_col >= 0)
          p.params = std::stod(cells[static_cast<std::size_t>(params_col)]);
      } catch (const std::exception&) {
        throw ParseError(where + ": non-numeric csv cell");
      }
      pts.push_back(p);
    }
  }
  validate_points(pts);
  return pts;
}

inline json fit_to_json(const RectifiedFit& f, std::uint64_t seed) {
  return json{{"form", "rectified"},
              {"params",
               {{"B", f.B}, {"D_l", f.D_l}, {"beta", f.beta}, {"E", f.E}}},
              {"rmse_log", f.rmse_log},
              {"n_points", f.n_points},
              {"seed", seed}};
}

inline json fit_to_json(const MarginalFit& f, std::uint64_t seed) {
  return json{{"form", "marginal"},
              {"params", {{"B", f.B}, {"beta", f.beta}, {"E", f.E}}},
              {"rmse_log", f.rmse_log},
              {"n_points", f.n_points},
              {"seed", seed}};
}

inline json fit_to_json(const PowerLawFit& f, std::uint64_t seed) {
  return json{{"form", "power"},
              {"params",
               {{"A", f.A},
                {"alpha", f.alpha},
                {"B", f.B},
                {"beta", f.beta},
                {"E", f.E}}},
              {"rmse_log", f.rmse_log},
              {"n_points", f.n_points},
              {"seed", seed}};
}

inline RectifiedFit rectified_fit_from_json(const json& j) {
  if (j.value("form", std::string()) != "rectified")
    throw ParseError("fit.json: expected form 'rectified'");
  const json& p = j.at("params");
  RectifiedFit f;
  f.B = p.at("B").get<double>();
  f.D_l = p.at("D_l").get<double>();
  f.beta = p.at("beta").get<double>();
  f.E = p.at("E").get<double>();
  f.rmse_log = j.value("rmse_log", 0.0);
  f.n_points = j.value("n_points", 0);
  return f;
}

}  // namespace synthweave
