#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "mvb/model.hpp"

namespace mvb {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<double>;

Vec to_vec(const std::vector<double>& v);
std::vector<double> to_std(const Vec& v);
Vec sample_on(const Grid& grid, const Curve& f);

// L = motion + diag(potential). motion holds the diffusion/drift/jump part.
struct GeneratorMatrix {
  Grid grid;
  Variant variant = Variant::kDiffusion;
  SpMat motion;
  Vec potential;
  Vec b;
  Vec d;
  // diffusion-type generators satisfy pi_i L_ij = pi_j L_ji with pi_i = exp(-2 l_i)
  bool symmetrizable = false;
  Vec pi;

  SpMat full() const;
  GeneratorMatrix with_potential(Vec v) const;
  int size() const { return grid.size(); }
};

struct GeneratorOptions {
  double dt_report = 0.0;  // > 0 enforces V(edge) <= -5/dt_report on absorbing grids
};

GeneratorMatrix build_generator(const RateModel& model, const DynamicsSpec& dyn, const Grid& grid,
                                const GeneratorOptions& opt = {});

// Same motion, potential -(b + d).
GeneratorMatrix q_generator(const GeneratorMatrix& gen);

// Crank-Nicolson for du/dt = L u with Rannacher startup (4 implicit Euler half-steps).
// One factorization of I - (h/2) L serves both the CN and the startup steps.
class Propagator {
 public:
  struct Factor {
    double h;
    Eigen::SparseLU<SpMat> lu;
    SpMat rhs;  // I + (h/2) L
  };

  Propagator(SpMat L, double dt);

  double dt() const { return dt_; }
  const SpMat& matrix() const { return L_; }
  const Factor& factor(double h) const;

  void cn_step(Vec& u, const Factor& f) const;
  void startup_step(Vec& u, const Factor& f) const;  // two implicit Euler half-steps
  void cn_step(CVec& u, const Factor& f) const;
  void startup_step(CVec& u, const Factor& f) const;

  // P_t g with uniform steps h = t/ceil(t/dt); the first two steps use the startup scheme.
  Vec evolve(const Vec& g, double t, bool startup = true) const;

 private:
  SpMat L_;
  double dt_;
  mutable std::mutex mu_;
  mutable std::map<double, std::unique_ptr<Factor>> cache_;
};

Vec evolve_P(const Vec& g, double t, const GeneratorMatrix& gen, double dt, bool startup = true);
Vec evolve_Q(const Vec& g, double t, const GeneratorMatrix& gen, double dt, bool startup = true);

struct SpectralData {
  Grid grid;
  double lambda0 = 0.0;  // -lambda0 is the rightmost eigenvalue
  double lambda1 = 0.0;
  Vec theta0;  // max 1
  Vec mu0;     // sum theta0 mu0 = 1
  double A = 0.0;
  double B = 0.0;
  double H = 0.0;  // fitted, a lower estimate of the operator constant
  double eigen_residual = 0.0;
  int iterations = 0;

  double gap() const { return lambda1 - lambda0; }
  double eps_crit() const { return 1e-4 * gap(); }
  double integrate(const Vec& g) const { return mu0.dot(g); }  // int g dmu0
  // Pi g = theta0 int g dmu0
  Vec project(const Vec& g) const { return theta0 * integrate(g); }
  double theta0_at(double x) const;

  nlohmann::json to_json() const;
};

struct SpectralOptions {
  double tol = 1e-10;
  int max_iter = 2000;
  bool fit_H = true;
  double dt_pde = 1e-2;
};

SpectralData principal_eigentriple(const GeneratorMatrix& gen, const SpectralOptions& opt = {});

// Rightmost eigenvalue of L and its right eigenvector (inverse iteration); -lambda0 returned as value.
std::pair<double, Vec> rightmost_eigenpair(const SpMat& L, double tol, int max_iter, int* iters = nullptr);

// Real parts of the discrete spectrum, descending.
std::vector<double> spectrum_real_parts(const GeneratorMatrix& gen, int count);

std::pair<double, double> constants_AB(const SpectralData& s, const Vec& b);

struct GirsanovReport {
  std::vector<double> eig_drift;      // top eigenvalues of 1/2 f'' - a f' + V f
  std::vector<double> eig_conjugate;  // top eigenvalues of 1/2 f'' + (V + (a' - a^2)/2) f
  double max_eig_diff = 0.0;
  double ground_state_rel_err = 0.0;  // theta0 vs e^l * phi0 where theta0 >= 1e-2
  bool pass = false;                  // eigenvalues within tol
  bool ground_state_pass = false;     // relative error <= 1e-4
  nlohmann::json to_json() const;
};

GirsanovReport girsanov_crosscheck(const RateModel& model, const DynamicsSpec& dyn, const Grid& grid, int count = 3,
                                   double tol = 1e-3);

struct EdgeDecayReport {
  double edge_max = 0.0;
  double interior_max = 0.0;
  bool pass = false;
  nlohmann::json to_json() const;
};

EdgeDecayReport hp4_edge_decay(const GeneratorMatrix& gen, double t, double dt);

}  // namespace mvb
