#pragma once

#include "srhc/grid.hpp"
#include "srhc/models.hpp"
#include "srhc/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace srhc {

// Feedback map pi: R^d -> U. Outputs are projected onto the attached control
// set, so every representation stays admissible.
class StagePolicy {
 public:
  enum class Representation { analytic, linear_gain, grid_table, saturated_linear };
  using Map = std::function<Vector(const Vector&)>;

  static StagePolicy analytic(std::string id, Eigen::Index state_dim, Eigen::Index control_dim, Map f,
                              std::optional<ControlSet> controls = std::nullopt);
  static StagePolicy linear_gain(const Matrix& k, std::optional<ControlSet> controls = std::nullopt);
  // x -> sat_radius(K x).
  static StagePolicy saturated_linear(const Matrix& k, double radius);
  static StagePolicy grid_table(std::shared_ptr<const Grid> grid, std::vector<Vector> controls_at_nodes,
                                ControlSet controls);

  Vector operator()(const Vector& x) const;

  Representation representation() const { return rep_; }
  const std::string& id() const { return id_; }
  Eigen::Index state_dim() const { return d_; }
  Eigen::Index control_dim() const { return m_; }
  const Matrix& gain() const { return gain_; }
  double radius() const { return radius_; }
  const Grid* grid() const { return grid_.get(); }
  const std::vector<Vector>& table() const { return table_; }

  // Grid tables: header row with metadata, then node coordinates and controls.
  void write_csv(std::ostream& os) const;

 private:
  Representation rep_ = Representation::analytic;
  std::string id_;
  Eigen::Index d_ = 0;
  Eigen::Index m_ = 0;
  Map map_;
  std::optional<ControlSet> controls_;
  Matrix gain_;
  double radius_ = 0.0;
  std::shared_ptr<const Grid> grid_;
  std::vector<Vector> table_;
};

class PolicySequence {
 public:
  PolicySequence() = default;
  explicit PolicySequence(std::vector<StagePolicy> stages);

  std::size_t length() const { return stages_.size(); }
  bool empty() const { return stages_.empty(); }
  const StagePolicy& operator[](std::size_t k) const { return stages_.at(k); }
  const std::vector<StagePolicy>& stages() const { return stages_; }

 private:
  std::vector<StagePolicy> stages_;
};

// p1 followed by p2.
PolicySequence concat(const PolicySequence& p1, const PolicySequence& p2);

// Stationary policy (pi_0*, pi_0*, ...).
class RecedingHorizonPolicy {
 public:
  RecedingHorizonPolicy(StagePolicy first_stage, std::string provenance)
      : first_(std::move(first_stage)), provenance_(std::move(provenance)) {}

  Vector operator()(const Vector& x) const { return first_(x); }
  const StagePolicy& first_stage() const { return first_; }
  const std::string& provenance() const { return provenance_; }

 private:
  StagePolicy first_;
  std::string provenance_;
};

// min{r, |z|} z/|z| for z != 0, else 0.
Vector sat_radial(const Vector& z, double r);

// -sat(x) with the unit scalar saturation.
double scalar_sat_policy(double x);

// Bounded-control stabilizer for x+ = Ax + Bu + w with A orthogonal.
struct OrthoStabilizer {
  Matrix A;
  Matrix B;
  int kappa = 0;
  Matrix A_kappa;
  Matrix reach_B;     // R(A, B) = [A^{k-1}B ... AB B]
  Matrix reach_pinv;  // R(A, B)^+
  Matrix reach_I;     // R(A, I_d)
  Matrix block_noise_cov;  // covariance of R(A, I_d) w_bar
  double u_max = 0.0;
  double rho = 0.0;          // ln E exp ||R(A, I_d) w_bar||
  double rho_example3 = 0.0; // ln E ||R(A, I_d) w_bar||
  double rho_ci_halfwidth = 0.0;
  std::string rho_method;
  double lambda_circ = 0.0;  // e^{rho - U_max}
  double K_radius = 0.0;     // 2 rho
};

struct RhoOptions {
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 0x5EED;
};

// Smallest j with rank [B AB ... A^{j-1}B] = d; throws if none up to d.
int reachability_index(const Matrix& a, const Matrix& b);

// [A^{j-1}M ... AM M]
Matrix reachability_matrix(const Matrix& a, const Matrix& m, int j);

// rho constants of the stabilizer; no authority check.
void compute_rho(OrthoStabilizer& s, const NoiseModel& noise, const RhoOptions& options = {});

OrthoStabilizer make_ortho_stabilizer(const Matrix& a, const Matrix& b, const NoiseModel& noise, double u_max,
                                      const RhoOptions& options = {});

// The kappa controls of one block; they depend only on the block's first state.
std::vector<Vector> ortho_control_block(const OrthoStabilizer& s, const Vector& x);

// Control law as used by the simulator: a block of controls computed from the
// state at the start of the block. Stationary policies have blocks of length one.
class ControlLaw {
 public:
  using BlockFn = std::function<std::vector<Vector>(const Vector&)>;

  ControlLaw(std::string name, int block_length, BlockFn fn)
      : name_(std::move(name)), block_length_(block_length), fn_(std::move(fn)) {}

  static ControlLaw stationary(const StagePolicy& policy, std::string name = {});
  static ControlLaw stationary(const RecedingHorizonPolicy& policy);
  static ControlLaw ortho(const OrthoStabilizer& s);

  int block_length() const { return block_length_; }
  const std::string& name() const { return name_; }
  std::vector<Vector> block(const Vector& x) const { return fn_(x); }

 private:
  std::string name_;
  int block_length_;
  BlockFn fn_;
};

}  // namespace srhc
