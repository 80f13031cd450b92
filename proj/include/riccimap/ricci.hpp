#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "riccimap/geom.hpp"
#include "riccimap/mesh.hpp"

#include <nlohmann/json.hpp>

namespace riccimap {

/// Circle packing metric: per-vertex radii (and their logs) plus fixed
/// per-edge intersection angles in [0, pi/2]. The log-radii at initialization
/// are kept as the base point of the Ricci energy integral.
struct CirclePackingMetric {
    std::vector<double> radii;
    std::vector<double> log_radii;
    std::vector<double> edge_weights;      // phi, indexed like mesh.edges()
    std::vector<double> initial_log_radii;
    int clamped_edges = 0;  // edges where inverting the cosine law left [0,1]

    void set_log_radii(const std::vector<double>& u)
    {
        log_radii = u;
        radii.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) radii[i] = std::exp(u[i]);
    }
};

enum class FlowMode { GRADIENT, NEWTON };

struct FlowReport {
    int iterations = 0;
    std::vector<double> max_residual_history;
    std::vector<double> energy_history;
    bool converged = false;
    int backtracks = 0;
};

inline void to_json(nlohmann::json& j, const FlowReport& r)
{
    j = nlohmann::json{{"iterations", r.iterations},
                       {"max_residual_history", r.max_residual_history},
                       {"energy_history", r.energy_history},
                       {"converged", r.converged},
                       {"backtracks", r.backtracks}};
}

/// Induced edge lengths of a circle packing metric (cosine law).
inline std::vector<double> edge_lengths(const TriMesh& mesh, const CirclePackingMetric& metric)
{
    std::vector<double> l(mesh.edge_count());
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& ev = mesh.edges()[e];
        double gi = metric.radii[ev[0]], gj = metric.radii[ev[1]];
        l[e] = std::sqrt(gi * gi + gj * gj + 2.0 * gi * gj * std::cos(metric.edge_weights[e]));
    }
    return l;
}

/// Initial circle packing from the embedded edge lengths. Radii are chosen as
/// the shortest incident edge length over sqrt(2), which keeps every inverted
/// cosine in [0, 1] at the low end and reproduces flat grids and equilateral
/// meshes exactly; cosines above 1 are clamped and counted.
inline CirclePackingMetric init_circle_packing(const TriMesh& mesh)
{
    auto lengths = mesh.edge_lengths();
    CirclePackingMetric m;
    m.radii.assign(mesh.vertex_count(), std::numeric_limits<double>::infinity());
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& ev = mesh.edges()[e];
        double r = lengths[e] / std::numbers::sqrt2;
        m.radii[ev[0]] = std::min(m.radii[ev[0]], r);
        m.radii[ev[1]] = std::min(m.radii[ev[1]], r);
    }
    m.log_radii.resize(m.radii.size());
    for (std::size_t v = 0; v < m.radii.size(); ++v) {
        if (!(m.radii[v] > 0.0) || !std::isfinite(m.radii[v]))
            throw DegenerateFaceError("non-positive initial radius at vertex " + std::to_string(v));
        m.log_radii[v] = std::log(m.radii[v]);
    }
    m.edge_weights.resize(mesh.edge_count());
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& ev = mesh.edges()[e];
        double gi = m.radii[ev[0]], gj = m.radii[ev[1]];
        double cosphi = (lengths[e] * lengths[e] - gi * gi - gj * gj) / (2.0 * gi * gj);
        if (cosphi > 1.0) {
            if (cosphi > 1.0 + 1e-12) ++m.clamped_edges;  // beyond roundoff
            cosphi = 1.0;
        } else if (cosphi < 0.0) {
            if (cosphi < -1e-12) ++m.clamped_edges;
            cosphi = 0.0;  // unreachable with this radius rule, kept as a guard
        }
        m.edge_weights[e] = std::acos(cosphi);
    }
    m.initial_log_radii = m.log_radii;

    // The induced metric must itself be a valid discrete metric.
    corner_angles_from_lengths(mesh, edge_lengths(mesh, m));
    return m;
}

namespace detail {

inline std::vector<double> lengths_at(const TriMesh& mesh, const std::vector<double>& weights,
                                      const std::vector<double>& u)
{
    std::vector<double> l(mesh.edge_count());
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& ev = mesh.edges()[e];
        double gi = std::exp(u[ev[0]]), gj = std::exp(u[ev[1]]);
        l[e] = std::sqrt(gi * gi + gj * gj + 2.0 * gi * gj * std::cos(weights[e]));
    }
    return l;
}

inline bool lengths_admissible(const TriMesh& mesh, const std::vector<double>& l)
{
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& fe = mesh.face_edges()[f];
        double a = l[fe[0]], b = l[fe[1]], c = l[fe[2]];
        if (!(a + b > c && b + c > a && c + a > b)) return false;
    }
    return true;
}

/// Interior residual K (targets handled by caller); full per-vertex deficits.
inline std::vector<double> curvature_at(const TriMesh& mesh, const std::vector<double>& weights,
                                        const std::vector<double>& u)
{
    return angle_deficit_from_lengths(mesh, lengths_at(mesh, weights, u));
}

/// Integrand of the Ricci energy along a straight segment in u-space:
/// sum over interior vertices of (K_i - Kbar_i) * du_i.
inline double energy_integrand(const TriMesh& mesh, const std::vector<double>& weights,
                               const std::vector<double>& u, const std::vector<double>& du,
                               const std::vector<double>& targets)
{
    auto K = curvature_at(mesh, weights, u);
    double g = 0.0;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!mesh.is_boundary_vertex(v)) g += (K[v] - targets[v]) * du[v];
    return g;
}

/// Composite Gauss-Legendre (8 point) line integral of the energy integrand
/// from ua to ub.
inline double energy_segment(const TriMesh& mesh, const std::vector<double>& weights,
                             const std::vector<double>& ua, const std::vector<double>& ub,
                             const std::vector<double>& targets, int panels)
{
    static const double gl_x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                   0.9602898564975363};
    static const double gl_w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                   0.1012285362903763};
    const int n = static_cast<int>(ua.size());
    std::vector<double> du(n), u(n);
    for (int i = 0; i < n; ++i) du[i] = ub[i] - ua[i];
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        double t0 = static_cast<double>(p) / panels, t1 = static_cast<double>(p + 1) / panels;
        double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
        for (int q = 0; q < 4; ++q) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                double t = mid + sgn * half * gl_x[q];
                for (int i = 0; i < n; ++i) u[i] = ua[i] + t * du[i];
                total += gl_w[q] * half * energy_integrand(mesh, weights, u, du, targets);
            }
        }
    }
    return total;
}

}  // namespace detail

/// Ricci energy at the metric's current log-radii, integrated from its initial
/// log-radii. Its partial derivative w.r.t. an interior u_i is (K_i - Kbar_i).
inline double ricci_energy(const TriMesh& mesh, const CirclePackingMetric& metric,
                           const std::vector<double>& targets)
{
    double span = 0.0;
    for (std::size_t i = 0; i < metric.log_radii.size(); ++i)
        span = std::max(span, std::abs(metric.log_radii[i] - metric.initial_log_radii[i]));
    if (span == 0.0) return 0.0;
    int panels = std::clamp(static_cast<int>(span * 16.0) + 8, 8, 64);
    return detail::energy_segment(mesh, metric.edge_weights, metric.initial_log_radii,
                                  metric.log_radii, targets, panels);
}

namespace detail {

/// Hessian of the Ricci energy restricted to interior vertices:
/// H[p][q] = dK_p/du_q, assembled analytically face by face.
inline Eigen::SparseMatrix<double> interior_hessian(const TriMesh& mesh,
                                                    const std::vector<double>& weights,
                                                    const std::vector<double>& u,
                                                    const std::vector<int>& interior_id)
{
    const int n_int = *std::max_element(interior_id.begin(), interior_id.end()) + 1;
    auto l = lengths_at(mesh, weights, u);
    auto angles = corner_angles_from_lengths(mesh, l);

    // dl/du for both endpoints of each edge
    std::vector<std::array<double, 2>> dl(mesh.edge_count());
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& ev = mesh.edges()[e];
        double gi = std::exp(u[ev[0]]), gj = std::exp(u[ev[1]]);
        double c = std::cos(weights[e]);
        dl[e][0] = gi * (gi + gj * c) / l[e];
        dl[e][1] = gj * (gj + gi * c) / l[e];
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.face_count()) * 9);
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.face(f);
        const auto& fe = mesh.face_edges()[f];
        const double a = l[fe[0]], b = l[fe[1]], c = l[fe[2]];
        const double sin0 = std::sin(angles[f][0]), sin1 = std::sin(angles[f][1]),
                     sin2 = std::sin(angles[f][2]);
        const double cos0 = std::cos(angles[f][0]), cos1 = std::cos(angles[f][1]),
                     cos2 = std::cos(angles[f][2]);
        // dtheta_c/dl_e for the three corners; lengths ordered (a,b,c) = opposite (0,1,2)
        double dth[3][3];
        dth[0][0] = a / (b * c * sin0);
        dth[0][1] = -a * cos2 / (b * c * sin0);
        dth[0][2] = -a * cos1 / (b * c * sin0);
        dth[1][1] = b / (c * a * sin1);
        dth[1][2] = -b * cos0 / (c * a * sin1);
        dth[1][0] = -b * cos2 / (c * a * sin1);
        dth[2][2] = c / (a * b * sin2);
        dth[2][0] = -c * cos1 / (a * b * sin2);
        dth[2][1] = -c * cos0 / (a * b * sin2);

        // dl_e/du_v within this face: edge fe[e] joins the two corners != e
        double dlu[3][3] = {};
        for (int e = 0; e < 3; ++e) {
            const auto& ev = mesh.edges()[fe[e]];
            for (int v = 0; v < 3; ++v) {
                if (t[v] == ev[0]) dlu[e][v] = dl[fe[e]][0];
                else if (t[v] == ev[1]) dlu[e][v] = dl[fe[e]][1];
            }
        }

        for (int cnr = 0; cnr < 3; ++cnr) {
            int p = interior_id[t[cnr]];
            if (p < 0) continue;
            for (int v = 0; v < 3; ++v) {
                int q = interior_id[t[v]];
                if (q < 0) continue;
                double dtheta_du = 0.0;
                for (int e = 0; e < 3; ++e) dtheta_du += dth[cnr][e] * dlu[e][v];
                // K_p = const - sum of angles, so dK/du = -dtheta/du
                trip.emplace_back(p, q, -dtheta_du);
            }
        }
    }
    Eigen::SparseMatrix<double> H(n_int, n_int);
    H.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<double> Ht = H.transpose();
    return 0.5 * (H + Ht);
}

}  // namespace detail

/// Discrete surface Ricci flow with free boundary: drives every interior
/// angle-deficit curvature below epsilon while boundary log-radii stay fixed.
/// Returns converged=false (rather than throwing) when max_iters runs out.
inline std::pair<CirclePackingMetric, FlowReport> ricci_flow(const TriMesh& mesh,
                                                             const CirclePackingMetric& metric,
                                                             double epsilon, int max_iters,
                                                             FlowMode mode,
                                                             double gradient_step = 0.05)
{
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const int nv = mesh.vertex_count();
    std::vector<int> interior_id(nv, -1);
    std::vector<int> interior;
    for (int v = 0; v < nv; ++v)
        if (!mesh.is_boundary_vertex(v)) {
            interior_id[v] = static_cast<int>(interior.size());
            interior.push_back(v);
        }
    const std::vector<double> targets(nv, 0.0);

    CirclePackingMetric out = metric;
    std::vector<double> u = metric.log_radii;
    FlowReport report;
    if (interior.empty()) {
        report.converged = true;
        report.max_residual_history.push_back(0.0);
        report.energy_history.push_back(ricci_energy(mesh, out, targets));
        return {out, report};
    }

    double energy = ricci_energy(mesh, out, targets);

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    std::vector<double> trial(nv), du(nv, 0.0);
    for (int iter = 0; iter <= max_iters; ++iter) {
        auto K = detail::curvature_at(mesh, metric.edge_weights, u);
        double residual = 0.0;
        for (int v : interior) residual = std::max(residual, std::abs(K[v]));
        report.max_residual_history.push_back(residual);
        report.energy_history.push_back(energy);
        if (residual < epsilon) {
            report.converged = true;
            break;
        }
        if (iter == max_iters) break;

        // step direction on interior vertices
        std::fill(du.begin(), du.end(), 0.0);
        bool have_newton = false;
        if (mode == FlowMode::NEWTON) {
            auto H = detail::interior_hessian(mesh, metric.edge_weights, u, interior_id);
            solver.compute(H);
            if (solver.info() == Eigen::Success) {
                Eigen::VectorXd rhs(interior.size());
                for (std::size_t i = 0; i < interior.size(); ++i) rhs[i] = -K[interior[i]];
                Eigen::VectorXd step = solver.solve(rhs);
                if (solver.info() == Eigen::Success && step.allFinite()) {
                    for (std::size_t i = 0; i < interior.size(); ++i) du[interior[i]] = step[i];
                    have_newton = true;
                }
            }
        }
        if (!have_newton)
            for (int v : interior) du[v] = gradient_step * (targets[v] - K[v]);

        // backtracking: induced lengths must stay a metric and energy must not rise
        double scale = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (int v = 0; v < nv; ++v) trial[v] = u[v] + scale * du[v];
            if (detail::lengths_admissible(mesh, detail::lengths_at(mesh, metric.edge_weights, trial))) {
                double delta = detail::energy_segment(mesh, metric.edge_weights, u, trial, targets, 2);
                if (delta <= 0.0) {
                    u = trial;
                    energy += delta;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
            ++report.backtracks;
        }
        if (!accepted)
            throw MetricCollapseError("backtracking failed to find an admissible step at iteration " +
                                      std::to_string(iter));
        ++report.iterations;
    }

    out.set_log_radii(u);
    return {out, report};
}

}  // namespace riccimap
