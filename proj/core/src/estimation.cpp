#include "mmtc/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mmtc/quantization.hpp"

namespace mmtc {

namespace {

constexpr double kPivotTolerance = 1e-12;
constexpr int kMaxRows = 64;

std::string mask_string(SlotMask mask) {
  std::ostringstream s;
  s << '{';
  bool first = true;
  for (int k = 0; k < kMaxRows; ++k) {
    if (mask & (SlotMask{1} << k)) {
      if (!first) s << ',';
      s << k;
      first = false;
    }
  }
  s << '}';
  return s.str();
}

std::vector<int> decoded_sensors(const SelectionPlan& plan, SlotMask decoded) {
  std::vector<int> out;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (decoded & (SlotMask{1} << k)) out.push_back(plan.selected[k]);
  }
  return out;
}

// Cholesky of the inner matrix with the relative pivot test.
Eigen::LLT<Matrix> checked_cholesky(const Matrix& inner, SlotMask decoded) {
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw SingularSubset("inner covariance not positive definite for decode set " +
                             mask_string(decoded),
                         decoded);
  }
  const Vector pivots = llt.matrixL().toDenseMatrix().diagonal().array().square();
  if (pivots.size() > 0 && pivots.minCoeff() < kPivotTolerance * pivots.maxCoeff()) {
    throw SingularSubset("inner covariance singular within tolerance for decode set " +
                             mask_string(decoded),
                         decoded);
  }
  return llt;
}

// Inner matrix U (C + C_w + C_Delta) U^T over the decoded rows.
Matrix inner_matrix(const Matrix& prior, const Matrix& noise, const std::vector<int>& sensors,
                    const std::vector<double>& quant) {
  const auto n = static_cast<Eigen::Index>(sensors.size());
  Matrix a(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const int i = sensors[static_cast<std::size_t>(r)];
      const int j = sensors[static_cast<std::size_t>(c)];
      a(r, c) = prior(i, j) + noise(i, j);
    }
    a(r, r) += quant[static_cast<std::size_t>(r)];
  }
  return a;
}

double clamp_mse(double eps, double trace, SlotMask decoded) {
  const double slack = 1e-9 * std::max(trace, 1e-300);
  if (eps < -slack || eps > trace + slack) {
    throw std::logic_error("subset MSE outside [0, tr(C)] for decode set " +
                           mask_string(decoded));
  }
  return std::clamp(eps, 0.0, trace);
}

// One candidate occupant of a walk slot.
struct SlotData {
  int sensor = 0;
  double quant = 0.0;
  double per = 0.0;
};

// Depth-first walk over include/exclude decisions for every plan row. The
// Cholesky factor of the inner matrix and W = L^{-1} U C grow one row per
// included slot, so each visited decode set costs O(|I| M) on top of its parent.
// The last slot may hold several options; the walk over the other slots is
// shared and each option gets its own level sums.
class SubsetWalker {
 public:
  SubsetWalker(const Matrix& prior, const Matrix& noise, const std::vector<SlotData>& fixed,
               const std::vector<SlotData>& options, std::vector<int> plan_row, double trace,
               int max_errors, double weight_floor, const MseEvaluator::SubsetVisitor& visit)
      : n_(static_cast<int>(fixed.size()) + 1),
        m_(static_cast<int>(prior.rows())),
        trace_(trace),
        max_errors_(max_errors),
        floor_(weight_floor),
        visit_(visit),
        plan_row_(std::move(plan_row)),
        options_(options),
        a_(static_cast<std::size_t>(n_ * n_)),
        b_(static_cast<std::size_t>(n_ * m_)),
        aopt_(options.size() * static_cast<std::size_t>(n_)),
        bopt_(options.size() * static_cast<std::size_t>(m_)),
        l_(static_cast<std::size_t>(n_ * n_)),
        w_(static_cast<std::size_t>(n_ * m_)),
        idx_(static_cast<std::size_t>(n_)),
        explained_(static_cast<std::size_t>(n_ + 1), 0.0),
        max_pivot_(static_cast<std::size_t>(n_ + 1), 0.0),
        succ_(static_cast<std::size_t>(n_)),
        fail_(static_cast<std::size_t>(n_)),
        tmp_(static_cast<std::size_t>(n_)) {
    const auto nf = static_cast<int>(fixed.size());
    for (int r = 0; r < nf; ++r) {
      const int i = fixed[static_cast<std::size_t>(r)].sensor;
      for (int c = 0; c < nf; ++c) {
        const int j = fixed[static_cast<std::size_t>(c)].sensor;
        a_[static_cast<std::size_t>(r * n_ + c)] = prior(i, j) + noise(i, j);
      }
      a_[static_cast<std::size_t>(r * n_ + r)] += fixed[static_cast<std::size_t>(r)].quant;
      for (int c = 0; c < m_; ++c) b_[static_cast<std::size_t>(r * m_ + c)] = prior(i, c);
      fail_[static_cast<std::size_t>(r)] = fixed[static_cast<std::size_t>(r)].per;
      succ_[static_cast<std::size_t>(r)] = 1.0 - fixed[static_cast<std::size_t>(r)].per;
    }
    for (std::size_t o = 0; o < options.size(); ++o) {
      const int i = options[o].sensor;
      double* col = &aopt_[o * static_cast<std::size_t>(n_)];
      for (int r = 0; r < nf; ++r) {
        const int j = fixed[static_cast<std::size_t>(r)].sensor;
        col[r] = prior(j, i) + noise(j, i);
      }
      col[nf] = prior(i, i) + noise(i, i) + options[o].quant;
      double* brow = &bopt_[o * static_cast<std::size_t>(m_)];
      for (int c = 0; c < m_; ++c) brow[c] = prior(i, c);
    }
    MseEvaluator::LevelSums empty;
    empty.weight.assign(static_cast<std::size_t>(n_ + 1), 0.0);
    empty.weighted_mse.assign(static_cast<std::size_t>(n_ + 1), 0.0);
    sums_.assign(options.size(), empty);
  }

  std::vector<MseEvaluator::LevelSums> run() {
    walk(0, 0, 0, 1.0, 0);
    return std::move(sums_);
  }

 private:
  void walk(int slot, int count, int errors, double weight, SlotMask mask) {
    const auto s = static_cast<std::size_t>(slot);
    if (slot == n_ - 1) {
      last_slot(count, errors, weight, mask);
      return;
    }
    const double w_in = weight * succ_[s];
    if (w_in > floor_) {
      include(&a_[s * static_cast<std::size_t>(n_)], a_[s * static_cast<std::size_t>(n_) + s],
              &b_[s * static_cast<std::size_t>(m_)], slot, count, mask);
      walk(slot + 1, count + 1, errors, w_in, mask | (SlotMask{1} << slot));
    }
    if (errors < max_errors_) {
      const double w_out = weight * fail_[s];
      if (w_out > floor_) walk(slot + 1, count, errors + 1, w_out, mask);
    }
  }

  void last_slot(int count, int errors, double weight, SlotMask mask) {
    const int slot = n_ - 1;
    const SlotMask with = mask | (SlotMask{1} << slot);
    const double eps_out = trace_ - explained_[static_cast<std::size_t>(count)];
    for (std::size_t o = 0; o < options_.size(); ++o) {
      const double per = options_[o].per;
      const double w_in = weight * (1.0 - per);
      if (w_in > floor_) {
        include(&aopt_[o * static_cast<std::size_t>(n_)],
                aopt_[o * static_cast<std::size_t>(n_) + static_cast<std::size_t>(slot)],
                &bopt_[o * static_cast<std::size_t>(m_)], slot, count, mask);
        leaf(o, errors, w_in, trace_ - explained_[static_cast<std::size_t>(count + 1)], with);
      }
      if (errors < max_errors_) {
        const double w_out = weight * per;
        if (w_out > floor_) leaf(o, errors + 1, w_out, eps_out, mask);
      }
    }
  }

  void leaf(std::size_t option, int errors, double weight, double raw_eps, SlotMask mask) {
    const double eps = clamp_mse(raw_eps, trace_, to_plan(mask));
    MseEvaluator::LevelSums& sums = sums_[option];
    sums.weight[static_cast<std::size_t>(errors)] += weight;
    sums.weighted_mse[static_cast<std::size_t>(errors)] += weight * eps;
    if (visit_) visit_(to_plan(mask), weight, eps);
  }

  SlotMask to_plan(SlotMask mask) const {
    SlotMask out = 0;
    for (int k = 0; k < n_; ++k) {
      if (mask & (SlotMask{1} << k)) out |= SlotMask{1} << plan_row_[static_cast<std::size_t>(k)];
    }
    return out;
  }

  // Appends factor row `count` for walk slot `j`. `col[r]` is the inner entry
  // between slot j and walk slot r, `brow` the prior row of the sensor in slot j.
  void include(const double* col, double diag, const double* brow, int j, int count,
               SlotMask mask) {
    double sq = 0.0;
    for (int r = 0; r < count; ++r) {
      const double* lr = &l_[static_cast<std::size_t>(r * n_)];
      double v = col[idx_[static_cast<std::size_t>(r)]];
      for (int q = 0; q < r; ++q) v -= lr[q] * tmp_[static_cast<std::size_t>(q)];
      v /= lr[r];
      tmp_[static_cast<std::size_t>(r)] = v;
      sq += v * v;
    }
    const double pivot = diag - sq;
    const double max_pivot = std::max(max_pivot_[static_cast<std::size_t>(count)], pivot);
    if (!(pivot > 0.0) || pivot < kPivotTolerance * max_pivot) {
      const SlotMask bad = to_plan(mask | (SlotMask{1} << j));
      throw SingularSubset("inner covariance singular within tolerance for decode set " +
                               mask_string(bad),
                           bad);
    }
    const double root = std::sqrt(pivot);
    double* lrow = &l_[static_cast<std::size_t>(count * n_)];
    for (int q = 0; q < count; ++q) lrow[q] = tmp_[static_cast<std::size_t>(q)];
    lrow[count] = root;

    double* wrow = &w_[static_cast<std::size_t>(count * m_)];
    for (int c = 0; c < m_; ++c) wrow[c] = brow[c];
    for (int r = 0; r < count; ++r) {
      const double coef = tmp_[static_cast<std::size_t>(r)];
      const double* wr = &w_[static_cast<std::size_t>(r * m_)];
      for (int c = 0; c < m_; ++c) wrow[c] -= coef * wr[c];
    }
    const double inv = 1.0 / root;
    double gain = 0.0;
    for (int c = 0; c < m_; ++c) {
      wrow[c] *= inv;
      gain += wrow[c] * wrow[c];
    }
    idx_[static_cast<std::size_t>(count)] = j;
    explained_[static_cast<std::size_t>(count + 1)] =
        explained_[static_cast<std::size_t>(count)] + gain;
    max_pivot_[static_cast<std::size_t>(count + 1)] = max_pivot;
  }

  int n_;
  int m_;
  double trace_;
  int max_errors_;
  double floor_;
  MseEvaluator::SubsetVisitor visit_;
  std::vector<int> plan_row_;
  const std::vector<SlotData>& options_;
  std::vector<double> a_, b_, aopt_, bopt_, l_, w_;
  std::vector<int> idx_;
  std::vector<double> explained_, max_pivot_, succ_, fail_, tmp_;
  std::vector<MseEvaluator::LevelSums> sums_;
};

double bound_from_sums(const MseEvaluator::LevelSums& s, int k_max, double trace) {
  double kept_weight = 0.0;
  double value = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    kept_weight += s.weight[static_cast<std::size_t>(k)];
    value += s.weighted_mse[static_cast<std::size_t>(k)];
  }
  // Remaining mass (more than K losses or pruned) charged at the all-lost MSE.
  return value + std::max(0.0, 1.0 - kept_weight) * trace;
}

}  // namespace

std::vector<SlotMask> decode_sets_in_order(int rows) {
  if (rows < 0 || rows > kMaxRows - 1) throw InvalidArgument("too many plan rows");
  std::vector<SlotMask> out;
  for (int k = 0; k <= rows; ++k) {
    const int size = rows - k;
    // Lexicographic combinations of `size` slots out of `rows`.
    std::vector<int> comb(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) comb[static_cast<std::size_t>(i)] = i;
    while (true) {
      SlotMask m = 0;
      for (int v : comb) m |= SlotMask{1} << v;
      out.push_back(m);
      int i = size - 1;
      while (i >= 0 && comb[static_cast<std::size_t>(i)] == rows - size + i) --i;
      if (i < 0) break;
      ++comb[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j) {
        comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

double decode_weight(const Vector& row_per, SlotMask decoded) {
  double p = 1.0;
  for (Eigen::Index k = 0; k < row_per.size(); ++k) {
    p *= (decoded & (SlotMask{1} << k)) ? (1.0 - row_per(k)) : row_per(k);
  }
  return p;
}

Vector default_margins(const Matrix& prior_cov, const Matrix& noise_cov) {
  Vector s(prior_cov.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s(i) = dynamic_margin(std::max(prior_cov(i, i), 0.0), std::max(noise_cov(i, i), 0.0));
  }
  return s;
}

MseEvaluator::MseEvaluator(Matrix prior_cov, Matrix noise_cov, Vector margins, Matrix per_table)
    : prior_(std::move(prior_cov)),
      noise_(std::move(noise_cov)),
      margins_(std::move(margins)),
      per_(std::move(per_table)) {
  const auto m = prior_.rows();
  if (m < 1 || prior_.cols() != m || noise_.rows() != m || noise_.cols() != m ||
      margins_.size() != m || per_.rows() != m || per_.cols() < 1) {
    throw InvalidArgument("evaluator dimension mismatch");
  }
  if ((per_.array() < 0.0).any() || (per_.array() > 1.0).any()) {
    throw InvalidArgument("PER table entries must lie in [0, 1]");
  }
  trace_ = prior_.trace();
}

MseEvaluator MseEvaluator::from(const FieldModel& model, const LinkProfile& link) {
  model.validate();
  return from(model.prior_cov, model.noise_cov, link);
}

MseEvaluator MseEvaluator::from(const Matrix& prior_cov, const Matrix& noise_cov,
                                const LinkProfile& link) {
  if (static_cast<Eigen::Index>(link.size()) != prior_cov.rows()) {
    throw InvalidArgument("link profile and field model disagree on sensor count");
  }
  return MseEvaluator(prior_cov, noise_cov, default_margins(prior_cov, noise_cov), link.per);
}

void MseEvaluator::check_plan(const SelectionPlan& plan) const {
  plan.validate(sensors(), max_bits());
  if (plan.size() >= static_cast<std::size_t>(kMaxRows)) {
    throw InvalidArgument("plans are limited to 63 rows");
  }
}

Vector MseEvaluator::row_per(const SelectionPlan& plan) const {
  Vector p(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t k = 0; k < plan.size(); ++k) {
    p(static_cast<Eigen::Index>(k)) = per_(plan.selected[k], plan.bits[k] - 1);
  }
  return p;
}

Vector MseEvaluator::row_quant_noise(const SelectionPlan& plan) const {
  Vector q(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t k = 0; k < plan.size(); ++k) {
    q(static_cast<Eigen::Index>(k)) =
        quant_noise_variance(margins_(plan.selected[k]), plan.bits[k]);
  }
  return q;
}

double MseEvaluator::subset_mse(const SelectionPlan& plan, SlotMask decoded) const {
  check_plan(plan);
  const std::vector<int> sensors = decoded_sensors(plan, decoded);
  if (sensors.empty()) return trace_;
  const Vector q = row_quant_noise(plan);
  std::vector<double> quant;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (decoded & (SlotMask{1} << k)) quant.push_back(q(static_cast<Eigen::Index>(k)));
  }
  const Matrix inner = inner_matrix(prior_, noise_, sensors, quant);
  const auto llt = checked_cholesky(inner, decoded);
  Matrix cross(static_cast<Eigen::Index>(sensors.size()), prior_.cols());
  for (std::size_t r = 0; r < sensors.size(); ++r) {
    cross.row(static_cast<Eigen::Index>(r)) = prior_.row(sensors[r]);
  }
  const Matrix w = llt.matrixL().solve(cross);
  return clamp_mse(trace_ - w.squaredNorm(), trace_, decoded);
}

MseEvaluator::LevelSums MseEvaluator::accumulate(const SelectionPlan& plan, int max_errors,
                                                 const SubsetVisitor& visit,
                                                 double weight_floor) const {
  check_plan(plan);
  const int n = static_cast<int>(plan.size());
  if (max_errors < 0 || max_errors > n) throw InvalidArgument("max_errors out of range");
  if (!(weight_floor >= 0.0)) throw InvalidArgument("weight floor must be nonnegative");
  const Vector q = row_quant_noise(plan);
  const Vector p = row_per(plan);
  std::vector<SlotData> rows;
  std::vector<int> order;
  for (int k = 0; k < n; ++k) {
    rows.push_back({plan.selected[static_cast<std::size_t>(k)], q(k), p(k)});
    order.push_back(k);
  }
  const std::vector<SlotData> last{rows.back()};
  rows.pop_back();
  SubsetWalker walker(prior_, noise_, rows, last, std::move(order), trace_, max_errors,
                      weight_floor, visit);
  return std::move(walker.run().front());
}

std::vector<double> MseEvaluator::bound_row_options(const SelectionPlan& plan, std::size_t row,
                                                    const std::vector<RowOption>& options,
                                                    int k_max, double weight_floor) const {
  check_plan(plan);
  const int n = static_cast<int>(plan.size());
  if (row >= plan.size()) throw InvalidArgument("row index out of range");
  if (k_max < 0 || k_max > n - 1) {
    throw InvalidArgument("bound truncation K must lie in [0, N-1]");
  }
  if (!(weight_floor >= 0.0)) throw InvalidArgument("weight floor must be nonnegative");
  std::vector<SlotData> fixed;
  std::vector<int> order;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (k == row) continue;
    const int s = plan.selected[k];
    fixed.push_back({s, quant_noise_variance(margins_(s), plan.bits[k]), per_(s, plan.bits[k] - 1)});
    order.push_back(static_cast<int>(k));
  }
  order.push_back(static_cast<int>(row));
  std::vector<SlotData> opts;
  for (const RowOption& o : options) {
    if (o.sensor < 0 || o.sensor >= static_cast<int>(sensors())) {
      throw InvalidArgument("option sensor out of range");
    }
    if (o.bits < 1 || o.bits > max_bits()) throw InvalidArgument("option bits out of range");
    for (std::size_t k = 0; k < plan.size(); ++k) {
      if (k != row && plan.selected[k] == o.sensor) {
        throw InvalidArgument("option sensor already selected in another row");
      }
    }
    opts.push_back({o.sensor, quant_noise_variance(margins_(o.sensor), o.bits),
                    per_(o.sensor, o.bits - 1)});
  }
  if (opts.empty()) return {};
  SubsetWalker walker(prior_, noise_, fixed, opts, std::move(order), trace_, k_max, weight_floor,
                      {});
  const std::vector<LevelSums> sums = walker.run();
  std::vector<double> out;
  out.reserve(sums.size());
  for (const LevelSums& s : sums) out.push_back(bound_from_sums(s, k_max, trace_));
  return out;
}

double MseEvaluator::averaged(const SelectionPlan& plan) const {
  if (static_cast<int>(plan.size()) > enumeration_cap) {
    throw EnumerationCapExceeded("exact averaging over 2^" + std::to_string(plan.size()) +
                                 " decode sets exceeds the enumeration cap of " +
                                 std::to_string(enumeration_cap) +
                                 " rows; use the truncated bound instead");
  }
  const LevelSums s = accumulate(plan, static_cast<int>(plan.size()));
  double total = 0.0;
  for (double v : s.weighted_mse) total += v;
  return total;
}

double MseEvaluator::bound(const SelectionPlan& plan, int k_max, double weight_floor) const {
  const int n = static_cast<int>(plan.size());
  if (k_max < 0 || k_max > n - 1) {
    throw InvalidArgument("bound truncation K must lie in [0, N-1]");
  }
  return bound_from_sums(accumulate(plan, k_max, {}, weight_floor), k_max, trace_);
}

MseReport MseEvaluator::report(const SelectionPlan& plan, int k_max, bool per_subset) const {
  const int n = static_cast<int>(plan.size());
  if (k_max < 0 || k_max > n - 1) {
    throw InvalidArgument("bound truncation K must lie in [0, N-1]");
  }
  if (n > enumeration_cap) {
    throw EnumerationCapExceeded("report needs exact enumeration beyond the cap of " +
                                 std::to_string(enumeration_cap) + " rows");
  }
  std::vector<double> table;
  SubsetVisitor visitor;
  if (per_subset) {
    table.assign(std::size_t{1} << n, std::numeric_limits<double>::quiet_NaN());
    visitor = [&table](SlotMask m, double, double eps) { table[m] = eps; };
  }
  const LevelSums s = accumulate(plan, n, visitor);

  MseReport r;
  r.k_max = k_max;
  r.trace_prior = trace_;
  double kept_weight = 0.0;
  double kept = 0.0;
  for (int k = 0; k <= n; ++k) {
    r.exact += s.weighted_mse[static_cast<std::size_t>(k)];
    if (k <= k_max) {
      kept_weight += s.weight[static_cast<std::size_t>(k)];
      kept += s.weighted_mse[static_cast<std::size_t>(k)];
    }
  }
  r.bound = kept + std::max(0.0, 1.0 - kept_weight) * trace_;
  if (per_subset) {
    for (SlotMask m : decode_sets_in_order(n)) {
      // Zero-probability sets are skipped by the walk; fill them directly.
      const double eps = std::isnan(table[m]) ? subset_mse(plan, m) : table[m];
      r.per_subset.emplace_back(m, eps);
    }
  }
  return r;
}

Vector mmse_estimate(const FieldModel& model, const Vector& margins, const SelectionPlan& plan,
                     SlotMask decoded, const Vector& z_received) {
  plan.validate(model.size(), 62);
  const std::vector<int> sensors = decoded_sensors(plan, decoded);
  if (z_received.size() != static_cast<Eigen::Index>(sensors.size())) {
    throw InvalidArgument("received vector length must equal the decode set size");
  }
  if (sensors.empty()) return model.mean;
  std::vector<double> quant;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (decoded & (SlotMask{1} << k)) {
      quant.push_back(quant_noise_variance(margins(plan.selected[k]), plan.bits[k]));
    }
  }
  const Matrix inner = inner_matrix(model.prior_cov, model.noise_cov, sensors, quant);
  const auto llt = checked_cholesky(inner, decoded);
  Vector innovation(static_cast<Eigen::Index>(sensors.size()));
  Matrix cross(model.prior_cov.rows(), static_cast<Eigen::Index>(sensors.size()));
  for (std::size_t r = 0; r < sensors.size(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    innovation(ri) = z_received(ri) - model.mean(sensors[r]);
    cross.col(ri) = model.prior_cov.col(sensors[r]);
  }
  return model.mean + cross * llt.solve(innovation);
}

Vector mmse_estimate(const FieldModel& model, const SelectionPlan& plan, SlotMask decoded,
                     const Vector& z_received) {
  return mmse_estimate(model, default_margins(model.prior_cov, model.noise_cov), plan, decoded,
                       z_received);
}

double mse_for_subset(const FieldModel& model, const SelectionPlan& plan, SlotMask decoded) {
  const int b = *std::max_element(plan.bits.begin(), plan.bits.end());
  MseEvaluator ev(model.prior_cov, model.noise_cov,
                  default_margins(model.prior_cov, model.noise_cov),
                  Matrix::Zero(model.prior_cov.rows(), std::max(b, 1)));
  return ev.subset_mse(plan, decoded);
}

double averaged_mse(const FieldModel& model, const SelectionPlan& plan,
                    const LinkProfile& link) {
  return MseEvaluator::from(model, link).averaged(plan);
}

double bounded_mse(const FieldModel& model, const SelectionPlan& plan, const LinkProfile& link,
                   int k_max) {
  return MseEvaluator::from(model, link).bound(plan, k_max);
}

}  // namespace mmtc
