#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "xalign/error.hpp"
#include "xalign/format.hpp"
#include "xalign/matrix.hpp"
#include "xalign/preprocess.hpp"
#include "xalign/svd.hpp"

namespace xalign {

enum class Language { Source, Target };

constexpr std::string_view to_string(Language lang) noexcept {
  return lang == Language::Source ? "src" : "tgt";
}

struct PointLabel {
  std::string token;
  Language lang = Language::Source;
};

struct ProjectedPoint {
  std::string token;
  Language lang = Language::Source;
  double x = 0.0;
  double y = 0.0;
};

enum class ProjectionMethod { Pca, Tsne };

constexpr std::string_view to_string(ProjectionMethod m) noexcept {
  return m == ProjectionMethod::Pca ? "pca" : "tsne";
}

struct Projection2D {
  std::vector<ProjectedPoint> points;
  ProjectionMethod method = ProjectionMethod::Pca;
  std::map<std::string, std::string> params;
};

namespace detail {

inline void check_labels(const Matrix& vectors, const std::vector<PointLabel>& labels) {
  if (labels.size() != vectors.rows())
    fail(ErrorKind::DimensionMismatch, "label count does not match vector count");
  std::set<std::pair<std::string, Language>> seen;
  for (const auto& l : labels)
    if (!seen.emplace(l.token, l.lang).second)
      fail(ErrorKind::InvalidArgument, "duplicate point '" + l.token + "' (" +
                                           std::string(to_string(l.lang)) + ")");
  require_finite(vectors);
}

inline Projection2D assemble(const std::vector<PointLabel>& labels, const Matrix& coords,
                             ProjectionMethod method) {
  Projection2D out;
  out.method = method;
  out.points.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.points.push_back({labels[i].token, labels[i].lang, coords(i, 0), coords(i, 1)});
  return out;
}

}  // namespace detail

// Projects centered data onto the two leading principal directions, taken
// from the SVD of the (n-1)-normalized covariance. If the covariance has rank
// below 2, the y coordinate is set to zero and params["degenerate"] = "true".
inline Projection2D pca_2d(const Matrix& vectors, const std::vector<PointLabel>& labels) {
  detail::check_labels(vectors, labels);
  const std::size_t n = vectors.rows();
  const std::size_t d = vectors.cols();
  if (n < 3 || d < 2) fail(ErrorKind::InvalidArgument, "pca_2d needs at least 3 points and 2 dimensions");

  const Matrix centered = center(vectors);
  const Matrix ct = centered.transposed();
  Matrix cov = multiply_transposed(ct, ct);
  for (double& v : cov.values()) v /= static_cast<double>(n - 1);

  const SvdResult svd = svd_square(cov);
  const bool degenerate = svd.sigma[0] == 0.0 || svd.sigma[1] <= 1e-12 * svd.sigma[0];

  Matrix coords(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = centered.row(i);
    double x = 0.0, y = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      x += row[c] * svd.u(c, 0);
      y += row[c] * svd.u(c, 1);
    }
    coords(i, 0) = x;
    coords(i, 1) = degenerate ? 0.0 : y;
  }

  Projection2D out = detail::assemble(labels, coords, ProjectionMethod::Pca);
  out.params["degenerate"] = degenerate ? "true" : "false";
  out.params["variance_x"] = format_exact(svd.sigma[0]);
  out.params["variance_y"] = format_exact(degenerate ? 0.0 : svd.sigma[1]);
  return out;
}

struct TsneOptions {
  // Unset: 30, capped for small inputs. Set: used as given, refused above the cap.
  std::optional<double> perplexity;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  double init_sigma = 1e-4;
  double perplexity_tol = 1e-5;
  std::size_t bisection_steps = 50;
};

inline double perplexity_cap(std::size_t n) {
  return std::max(2.0, static_cast<double>(n - 1) / 3.0);
}

namespace tsne {

// Affinities from squared distances: p_j ∝ exp(-beta (dist_j - dist_min)).
// Returns the perplexity exp(H) of the resulting distribution.
inline double conditional_row(std::span<const double> dist, std::size_t self, double beta,
                              std::span<double> out) {
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dist.size(); ++j)
    if (j != self) dmin = std::min(dmin, dist[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    out[j] = j == self ? 0.0 : std::exp(-beta * (dist[j] - dmin));
    sum += out[j];
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    out[j] /= sum;
    if (out[j] > 0.0) entropy -= out[j] * std::log(out[j]);
  }
  return std::exp(entropy);
}

struct Affinities {
  Matrix joint;                    // symmetrized, sums to 1
  std::vector<double> perplexity;  // achieved per-point perplexity
};

inline Matrix squared_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      auto a = x.row(i);
      auto b = x.row(j);
      for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
      dist(i, j) = dist(j, i) = s;
    }
  return dist;
}

// Per-point Gaussian bandwidths by bisection on log(beta), then
// P = (P_cond + P_cond^T) / 2n.
inline Affinities joint_probabilities(const Matrix& dist, double perplexity, double tol,
                                      std::size_t steps) {
  const std::size_t n = dist.rows();
  Matrix cond(n, n);
  Affinities out;
  out.perplexity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = -50.0, hi = 50.0, log_beta = 0.0;
    double achieved = conditional_row(dist.row(i), i, 1.0, cond.row(i));
    for (std::size_t step = 0; step < steps && std::abs(achieved - perplexity) > tol; ++step) {
      // Larger beta means a narrower kernel and lower perplexity.
      if (achieved > perplexity)
        lo = log_beta;
      else
        hi = log_beta;
      log_beta = 0.5 * (lo + hi);
      achieved = conditional_row(dist.row(i), i, std::exp(log_beta), cond.row(i));
    }
    out.perplexity[i] = achieved;
  }
  out.joint = Matrix(n, n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.joint(i, j) = (cond(i, j) + cond(j, i)) * scale;
  return out;
}

// Student-t kernel values (1 + |y_i - y_j|^2)^-1 and their off-diagonal sum.
inline double student_kernel(const Matrix& y, Matrix& kernel) {
  const std::size_t n = y.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kernel(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y(i, 0) - y(j, 0);
      const double dy = y(i, 1) - y(j, 1);
      const double k = 1.0 / (1.0 + dx * dx + dy * dy);
      kernel(i, j) = kernel(j, i) = k;
      total += 2.0 * k;
    }
  }
  return total;
}

inline double kl_divergence(const Matrix& p, const Matrix& y) {
  Matrix kernel(y.rows(), y.rows());
  const double z = student_kernel(y, kernel);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (i == j || pij <= 0.0) continue;
      const double qij = std::max(kernel(i, j) / z, std::numeric_limits<double>::min());
      kl += pij * std::log(pij / qij);
    }
  return kl;
}

// Standard normal deviates from mt19937_64 through Box-Muller, so the stream
// is identical on every standard library.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double next() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace tsne

struct TsneTrace {
  double initial_kl = 0.0;
  double final_kl = 0.0;
  std::vector<double> perplexity;
  double p_sum = 0.0;
};

// Exact O(n^2) t-SNE. Input is zero-meaned and scaled by its largest absolute
// value first; gradient descent uses momentum with per-coordinate gains.
inline Projection2D tsne_2d(const Matrix& vectors, const std::vector<PointLabel>& labels,
                            const TsneOptions& options = {}, TsneTrace* trace = nullptr) {
  detail::check_labels(vectors, labels);
  const std::size_t n = vectors.rows();
  if (n < 4) fail(ErrorKind::InvalidArgument, "tsne_2d needs at least 4 points");
  const double cap = perplexity_cap(n);
  double perplexity = std::min(30.0, cap);
  if (options.perplexity) {
    perplexity = *options.perplexity;
    if (perplexity < 2.0) fail(ErrorKind::InvalidArgument, "perplexity must be at least 2");
    if (perplexity > cap)
      fail(ErrorKind::PerplexityTooLarge, "perplexity " + format_exact(perplexity) +
                                              " exceeds the cap " + format_exact(cap) + " for " +
                                              std::to_string(n) + " points");
  }

  Matrix x = center(vectors);
  const double scale = max_abs(x);
  if (scale > 0.0)
    for (double& v : x.values()) v /= scale;

  const tsne::Affinities aff = tsne::joint_probabilities(
      tsne::squared_distances(x), perplexity, options.perplexity_tol, options.bisection_steps);
  const Matrix& p = aff.joint;

  Matrix y(n, 2);
  tsne::GaussianStream gauss(options.seed);
  for (double& v : y.values()) v = options.init_sigma * gauss.next();

  if (trace) {
    trace->initial_kl = tsne::kl_divergence(p, y);
    trace->perplexity = aff.perplexity;
    trace->p_sum = 0.0;
    for (double v : p.values()) trace->p_sum += v;
  }

  Matrix velocity(n, 2), gains(n, 2, 1.0), grad(n, 2), kernel(n, n);
  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    const double exaggeration = iter < options.exaggeration_iterations ? options.early_exaggeration : 1.0;
    const double momentum = iter < options.momentum_switch ? options.initial_momentum : options.final_momentum;
    const double z = tsne::student_kernel(y, kernel);

    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double k = kernel(i, j);
        const double coeff = (exaggeration * p(i, j) - k / z) * k;
        gx += coeff * (y(i, 0) - y(j, 0));
        gy += coeff * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 2; ++c) {
        double& g = gains(i, c);
        const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        g = same_sign ? g * 0.8 : g + 0.2;
        g = std::max(g, 0.01);
        velocity(i, c) = momentum * velocity(i, c) - options.learning_rate * g * grad(i, c);
        y(i, c) += velocity(i, c);
      }

    const auto means = column_means(y);
    for (std::size_t i = 0; i < n; ++i) {
      y(i, 0) -= means[0];
      y(i, 1) -= means[1];
    }
  }

  if (trace) trace->final_kl = tsne::kl_divergence(p, y);

  Projection2D out = detail::assemble(labels, y, ProjectionMethod::Tsne);
  out.params["perplexity"] = format_exact(perplexity);
  out.params["iterations"] = std::to_string(options.iterations);
  out.params["seed"] = std::to_string(options.seed);
  out.params["learning_rate"] = format_exact(options.learning_rate);
  out.params["early_exaggeration"] = format_exact(options.early_exaggeration);
  out.params["exaggeration_iterations"] = std::to_string(options.exaggeration_iterations);
  out.params["momentum"] = format_exact(options.initial_momentum) + "->" +
                           format_exact(options.final_momentum) + "@" +
                           std::to_string(options.momentum_switch);
  return out;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// "token,lang,x,y" with RFC 4180 quoting and round-trip exact coordinates.
inline void write_projection_csv(const Projection2D& proj, std::ostream& out) {
  out << "token,lang,x,y\r\n";
  for (const auto& p : proj.points)
    out << detail::csv_field(p.token) << ',' << to_string(p.lang) << ',' << format_exact(p.x) << ','
        << format_exact(p.y) << "\r\n";
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "failed to write projection CSV");
}

inline constexpr std::size_t kMaxLabelledPoints = 100;
inline constexpr std::string_view kSourceColor = "#1f77b4";
inline constexpr std::string_view kTargetColor = "#d62728";

inline std::string render_scatter_svg(const Projection2D& proj, std::string_view title) {
  if (proj.points.empty()) fail(ErrorKind::InvalidArgument, "nothing to plot");
  constexpr double width = 800.0, height = 640.0;
  constexpr double left = 40.0, right = 160.0, top = 50.0, bottom = 30.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double xmin = proj.points[0].x, xmax = xmin, ymin = proj.points[0].y, ymax = ymin;
  for (const auto& p : proj.points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  auto to_px = [](double v, double lo, double hi, double origin, double span, bool flip) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return origin + (flip ? 1.0 - t : t) * span;
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\">"
      << detail::xml_escape(title) << "</text>\n";

  const bool labelled = proj.points.size() <= kMaxLabelledPoints;
  svg << "<g id=\"points\">\n";
  for (const auto& p : proj.points) {
    const double cx = to_px(p.x, xmin, xmax, left, plot_w, false);
    const double cy = to_px(p.y, ymin, ymax, top, plot_h, true);
    const auto color = p.lang == Language::Source ? kSourceColor : kTargetColor;
    svg << "<circle cx=\"" << format_fixed(cx, 2) << "\" cy=\"" << format_fixed(cy, 2)
        << "\" r=\"3\" fill=\"" << color << "\" fill-opacity=\"0.8\"/>\n";
    if (labelled)
      svg << "<text x=\"" << format_fixed(cx + 4, 2) << "\" y=\"" << format_fixed(cy - 4, 2)
          << "\" font-family=\"sans-serif\" font-size=\"10\">" << detail::xml_escape(p.token)
          << "</text>\n";
  }
  svg << "</g>\n";

  const double lx = width - right + 20.0;
  svg << "<g id=\"legend\">\n";
  svg << "<rect x=\"" << lx << "\" y=\"" << top << "\" width=\"10\" height=\"10\" fill=\"" << kSourceColor
      << "\"/>\n";
  svg << "<text x=\"" << lx + 16 << "\" y=\"" << top + 9
      << "\" font-family=\"sans-serif\" font-size=\"12\">source</text>\n";
  svg << "<rect x=\"" << lx << "\" y=\"" << top + 20 << "\" width=\"10\" height=\"10\" fill=\""
      << kTargetColor << "\"/>\n";
  svg << "<text x=\"" << lx + 16 << "\" y=\"" << top + 29
      << "\" font-family=\"sans-serif\" font-size=\"12\">target</text>\n";
  svg << "</g>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace xalign
