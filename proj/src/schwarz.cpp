#include "gdsw/schwarz.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "gdsw/error.hpp"

namespace gdsw {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Runs f(i) for i in [0, n); each index is handled exactly once, so results
// written to per-index slots do not depend on the worker count.
template <typename F>
void parallel_for(int n, int workers, F&& f)
{
   workers = std::max(1, std::min(workers, n));
   if (workers == 1) {
      for (int i = 0; i < n; ++i) f(i);
      return;
   }
   std::exception_ptr error;
   std::mutex error_mutex;
   std::vector<std::thread> pool;
   for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
         for (int i = w; i < n; i += workers) {
            try {
               f(i);
            }
            catch (...) {
               std::lock_guard lock(error_mutex);
               if (!error) error = std::current_exception();
            }
         }
      });
   for (auto& t : pool) t.join();
   if (error) std::rethrow_exception(error);
}

constexpr double kPressureShift = 1e-10;

// Local factorization with one pressure-diagonal shift retry.
Factorization factorize_local(const CsrMatrix& local, std::span<const int> set, const LevelDofs& dofs, double amax,
                              double pivot_threshold, bool& shifted)
{
   shifted = false;
   try {
      return Factorization::compute(local, pivot_threshold);
   }
   catch (const NumericallySingular&) {
   }
   std::vector<Triplet> trip;
   for (int r = 0; r < local.rows(); ++r) {
      const auto cols = local.row_cols(r);
      const auto vals = local.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) trip.push_back({r, cols[k], vals[k]});
      if (dofs.dof_kind[set[r]] == kPressureKind) trip.push_back({r, r, -kPressureShift * amax});
   }
   shifted = true;
   return Factorization::compute(CsrMatrix::from_triplets(local.rows(), local.cols(), std::move(trip)),
                                 pivot_threshold);
}

}  // namespace

struct LevelBuilder {
   static std::unique_ptr<SchwarzLevel> build(const CsrMatrix& a, LevelDofs dofs, int index, int total_levels,
                                              const std::vector<std::vector<int>>& groupings,
                                              const HierarchyOptions& opt);
};

int HierarchyOptions::overlap(int level) const
{
   if (overlaps.empty()) return 1;
   return overlaps[std::min<std::size_t>(static_cast<std::size_t>(level - 1), overlaps.size() - 1)];
}

Flavor HierarchyOptions::flavor(int level) const
{
   if (flavors.empty()) return level == 1 ? Flavor::gdsw_star : Flavor::gdsw;
   return flavors[std::min<std::size_t>(static_cast<std::size_t>(level - 1), flavors.size() - 1)];
}

LevelDofs coarse_level_dofs(const SchwarzLevel& level, std::span<const int> grouping, int num_groups)
{
   if (!level.has_coarse()) throw InvalidArgument("coarse_level_dofs: level has no coarse space");
   if (static_cast<int>(grouping.size()) != level.num_subdomains())
      throw InvalidArgument("coarse_level_dofs: grouping must map every subdomain of the level");
   const auto& cols = level.coarse_basis().columns;
   LevelDofs next;
   next.dim = level.dofs().dim;
   next.num_subdomains = num_groups;
   next.dof_kind.reserve(cols.size());
   for (const auto& col : cols) {
      next.dof_kind.push_back(col.component);
      std::vector<int> groups;
      for (int s : col.sharing_set) groups.push_back(grouping[s]);
      std::sort(groups.begin(), groups.end());
      groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
      next.dof_to_subdomains.push_back(std::move(groups));
      next.dirichlet.push_back(0);
      next.pressure_null.push_back(col.component == kPressureKind ? 1.0 : 0.0);
   }
   next.validate();
   return next;
}

std::unique_ptr<SchwarzLevel> LevelBuilder::build(const CsrMatrix& a, LevelDofs dofs, int index, int total_levels,
                                                  const std::vector<std::vector<int>>& groupings,
                                                  const HierarchyOptions& opt)
{
   auto level_ptr = std::unique_ptr<SchwarzLevel>(new SchwarzLevel());
   SchwarzLevel& level = *level_ptr;
   if (a.rows() != a.cols() || a.rows() != dofs.size())
      throw DimensionMismatch("build_level: matrix order does not match the dof metadata");
   dofs.validate();
   const int k = opt.overlap(index);
   if (k < 0) throw InvalidArgument("build_level: overlap must be nonnegative");

   level.index_ = index;
   level.num_dofs_ = a.rows();
   level.diag_.level = index;
   level.diag_.num_dofs = a.rows();
   level.diag_.num_subdomains = dofs.num_subdomains;

   // Symbolic: ownership and algebraic overlap.
   auto t0 = Clock::now();
   const int nsub = dofs.num_subdomains;
   level.owned_.assign(static_cast<std::size_t>(nsub), {});
   for (int i = 0; i < dofs.size(); ++i) level.owned_[dofs.dof_to_subdomains[i].front()].push_back(i);
   std::vector<std::vector<int>> closure(static_cast<std::size_t>(nsub));
   for (int i = 0; i < dofs.size(); ++i)
      for (int s : dofs.dof_to_subdomains[i]) closure[s].push_back(i);
   const MatrixGraph graph(a);
   level.overlapping_.resize(static_cast<std::size_t>(nsub));
   parallel_for(nsub, opt.workers, [&](int s) { level.overlapping_[s] = graph.neighborhood(closure[s], k); });
   level.diag_.t_symbolic += seconds_since(t0);

   // Numeric: local factorizations.
   t0 = Clock::now();
   const double amax = a.max_abs();
   level.local_.resize(static_cast<std::size_t>(nsub));
   std::vector<char> shifted(static_cast<std::size_t>(nsub), 0);
   parallel_for(nsub, opt.workers, [&](int s) {
      const auto& set = level.overlapping_[s];
      if (set.empty()) return;
      bool sh = false;
      level.local_[s] = factorize_local(a.submatrix(set, set), set, dofs, amax, opt.pivot_threshold, sh);
      shifted[s] = sh;
   });
   level.diag_.t_numeric += seconds_since(t0);

   int omin = a.rows(), omax = 0;
   double osum = 0.0;
   for (int s = 0; s < nsub; ++s) {
      const int sz = static_cast<int>(level.overlapping_[s].size());
      omin = std::min(omin, sz);
      omax = std::max(omax, sz);
      osum += sz;
      level.diag_.local_fill += level.local_[s].info().fill;
      level.diag_.shifted_local_solves += shifted[s];
   }
   level.diag_.overlap_min = nsub > 0 ? omin : 0;
   level.diag_.overlap_max = omax;
   level.diag_.overlap_avg = nsub > 0 ? osum / nsub : 0.0;

   std::vector<InterfaceEntity> entities;
   if (index < total_levels) {
      t0 = Clock::now();
      entities = classify_interface(dofs);
      level.diag_.t_symbolic += seconds_since(t0);
   }
   // Pressure columns alone give a zero coarse matrix; without an interface
   // the local solves already cover the level.
   const bool coarse = std::any_of(entities.begin(), entities.end(),
                                   [](const InterfaceEntity& e) { return e.kind != EntityKind::pressure_subdomain; });
   if (coarse) {
      t0 = Clock::now();
      level.has_coarse_ = true;
      level.entities_ = std::move(entities);
      if (opt.flavor(index) == Flavor::gdsw_star) level.entities_ = merge_gdsw_star(level.entities_);
      level.diag_.entities = count_entities(level.entities_);
      const PhiGamma phi_gamma = build_phi_gamma(level.entities_, dofs);
      level.diag_.t_symbolic += seconds_since(t0);

      t0 = Clock::now();
      level.basis_ = build_coarse_basis(a, dofs, level.entities_, phi_gamma, opt.extension, opt.pivot_threshold);
      level.diag_.bordered_subdomains = level.basis_.bordered_subdomains;
      level.phi_transpose_ = level.basis_.phi.transpose();
      level.coarse_matrix_ = triple_product(level.basis_.phi, a);
      level.diag_.coarse_dim = level.coarse_matrix_.rows();
      level.diag_.t_numeric += seconds_since(t0);

      level.dofs_ = std::move(dofs);
      if (index + 1 < total_levels) {
         const std::size_t g = static_cast<std::size_t>(index - 1);
         if (g >= groupings.size())
            throw InvalidArgument("build_hierarchy: missing subdomain grouping for level " + std::to_string(index + 1));
         const auto& grouping = groupings[g];
         const int ngroups = grouping.empty() ? 0 : *std::max_element(grouping.begin(), grouping.end()) + 1;
         level.next_ = LevelBuilder::build(level.coarse_matrix_, coarse_level_dofs(level, grouping, ngroups), index + 1,
                                   total_levels, groupings, opt);
      }
      else {
         if (level.coarse_matrix_.rows() > opt.coarse_cap)
            throw CoarseTooLarge("coarse problem of order " + std::to_string(level.coarse_matrix_.rows()) +
                                 " exceeds the cap of " + std::to_string(opt.coarse_cap),
                                 level.coarse_matrix_.rows());
         t0 = Clock::now();
         level.coarse_solver_ = Factorization::compute(level.coarse_matrix_, opt.pivot_threshold);
         level.diag_.coarse_fill = level.coarse_solver_.info().fill;
         level.diag_.t_numeric += seconds_since(t0);
      }
   }
   else {
      level.dofs_ = std::move(dofs);
   }
   return level_ptr;
}

void SchwarzLevel::apply_local(std::span<const double> r, std::span<double> z) const
{
   if (r.size() != static_cast<std::size_t>(num_dofs_) || z.size() != r.size())
      throw DimensionMismatch("SchwarzLevel::apply: vector length does not match the level");
   std::fill(z.begin(), z.end(), 0.0);
   std::vector<double> buf;
   for (std::size_t s = 0; s < overlapping_.size(); ++s) {
      const auto& set = overlapping_[s];
      if (set.empty()) continue;
      buf.resize(set.size());
      for (std::size_t i = 0; i < set.size(); ++i) buf[i] = r[set[i]];
      local_[s].solve_columns(buf, 1);
      for (std::size_t i = 0; i < set.size(); ++i) z[set[i]] += buf[i];
   }
}

void SchwarzLevel::apply(std::span<const double> r, std::span<double> z) const
{
   apply_local(r, z);
   if (!has_coarse_) return;
   const int nc = coarse_matrix_.rows();
   std::vector<double> rc(static_cast<std::size_t>(nc));
   phi_transpose_.multiply(r, rc);
   std::vector<double> zc(rc.size());
   if (next_) next_->apply(rc, zc);
   else coarse_solver_.solve(rc, zc);
   std::vector<double> fine(z.size());
   basis_.phi.multiply(zc, fine);
   for (std::size_t i = 0; i < z.size(); ++i) z[i] += fine[i];
}

PreconditionerHierarchy PreconditionerHierarchy::build(const CsrMatrix& a, LevelDofs dofs,
                                                       const std::vector<std::vector<int>>& groupings,
                                                       const HierarchyOptions& options)
{
   if (options.levels < 1) throw InvalidArgument("build_hierarchy: levels must be at least 1");
   if (options.levels >= 3 && groupings.size() < static_cast<std::size_t>(options.levels - 2))
      throw InvalidArgument("build_hierarchy: a subregion map is required for every level beyond the second");
   PreconditionerHierarchy h;
   h.root_ = LevelBuilder::build(a, std::move(dofs), 1, options.levels, groupings, options);
   h.num_levels_ = 0;
   const SchwarzLevel* last = h.root_.get();
   for (++h.num_levels_; last->next(); last = last->next()) ++h.num_levels_;
   if (last->has_coarse()) ++h.num_levels_;
   return h;
}

const SchwarzLevel& PreconditionerHierarchy::level(int index) const
{
   const SchwarzLevel* l = root_.get();
   for (int i = 1; i < index && l; ++i) l = l->next();
   if (!l || index < 1) throw InvalidArgument("PreconditionerHierarchy::level: no level " + std::to_string(index));
   return *l;
}

std::vector<LevelDiagnostics> PreconditionerHierarchy::diagnostics() const
{
   std::vector<LevelDiagnostics> out;
   for (const SchwarzLevel* l = root_.get(); l; l = l->next()) out.push_back(l->diagnostics());
   return out;
}

double PreconditionerHierarchy::t_symbolic() const
{
   double t = 0.0;
   for (const auto& d : diagnostics()) t += d.t_symbolic;
   return t;
}

double PreconditionerHierarchy::t_numeric() const
{
   double t = 0.0;
   for (const auto& d : diagnostics()) t += d.t_numeric;
   return t;
}

void PreconditionerHierarchy::apply(std::span<const double> r, std::span<double> z) const { root_->apply(r, z); }

}  // namespace gdsw
