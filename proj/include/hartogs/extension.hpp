#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hartogs/expr.hpp"
#include "hartogs/geometry.hpp"
#include "hartogs/quadrature.hpp"

namespace hartogs {

// The contour P(z0') for the fiber over base together with the verified
// perturbation radius rho: for base points z' within sup-distance rho, the
// fiber of A over z' stays inside the enclosed region and the contour stays
// inside the Omega fiber over z'.
struct FiberContour {
    ComplexPoint base;  // z0' in C^{n-1}
    double rho = 0.0;
    PolygonalContour contour;
    int slot = 1;
};

enum class ProvenanceKind { Passthrough, FiberIntegral, GluedChain };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::Passthrough;
    std::optional<ComplexPoint> base;
    int chain_length = 0;

    std::string code() const;
};

struct ExtensionReport {
    ComplexPoint point;
    Complex value{};
    double error_estimate = 0.0;
    Provenance provenance;
};

struct ExtensionConfig {
    QuadratureConfig quadrature{};
    // Chain + gluing + boundary verification per base point; the fiber
    // integral alone is the fast path.
    bool verify = true;
    double cross_check_tol = 1e-8;   // glue_check, boundary_coincidence_check
    double coincidence_tol = 1e-7;   // |extension - f| where both are defined
    int fiber_grid = 32;             // sampling resolution for pi^i(A) membership
    int check_samples = 10;          // samples per glue / boundary check
    int max_rho_halvings = 20;
};

// Sampled membership in pi^i(Omega) and pi^i(A). A base point belongs to
// pi^i(A) iff some point of the fiber bounding box on a fiber_grid^2 lattice
// is a member of A; an empty sample means "not in pi^i(A)".
class ProjectedSets {
  public:
    ProjectedSets(DomainSpec omega, RemovableSetSpec a, int slot, int fiber_grid = 32);

    int base_dim() const { return omega_.n - 1; }
    int slot() const { return slot_; }
    bool in_a(const ComplexPoint& base) const;
    bool in_omega(const ComplexPoint& base) const;

    // Deterministic grid samples of pi^i(Omega) \ pi^i(A); computed once.
    const std::vector<ComplexPoint>& exterior_samples() const;
    ComplexPoint nearest_exterior(const ComplexPoint& base) const;

  private:
    DomainSpec omega_;
    RemovableSetSpec a_;
    int slot_;
    int fiber_grid_;
    mutable std::mutex mutex_;
    mutable std::optional<std::vector<ComplexPoint>> exterior_;
};

// Builds the lattice contour for the fiber over base and bisects rho from
// eps/2 until both stability inclusions hold for the 8 sup-norm perturbations
// per base coordinate plus the base itself.
FiberContour stable_neighborhood(const DomainSpec& omega, const RemovableSetSpec& a,
                                 int slot, const ComplexPoint& base, double eps,
                                 const ExtensionConfig& cfg = {});

// (1/2πi) of f(..., zeta, ...)/(zeta - pi_i(z)) around the fiber contour,
// zeta inserted at the contour's slot.
ExtensionReport fiber_extension(const ExprAst& f, const FiberContour& fc,
                                const ComplexPoint& z, const ExtensionConfig& cfg = {});

// Max difference of the two fiber extensions over samples in the overlap of
// the stability neighborhoods.
double glue_check(const ExprAst& f, const FiberContour& fc1, const FiberContour& fc2,
                  std::span<const ComplexPoint> samples, const ExtensionConfig& cfg = {});

// Max of |f(z) - fiber_extension(z)| over samples whose base points lie in
// U(z_b') but outside pi^i(A); there f itself is defined, so the comparison
// is direct.
double boundary_coincidence_check(const ExprAst& f, const DomainSpec& omega,
                                  const RemovableSetSpec& a, int slot,
                                  const ComplexPoint& boundary_base, const FiberContour& fc,
                                  std::span<const ComplexPoint> samples,
                                  const ExtensionConfig& cfg = {});

// Marches from start toward the nearest sampled exterior point of
// pi^i(Omega) \ pi^i(A), bisects the boundary crossing to step/100 and
// returns base points spaced <= step. When overlap_ok is given, consecutive
// points must satisfy it; otherwise the step is halved, up to 10 times.
std::vector<ComplexPoint> path_chain(
    const ComplexPoint& start, const ProjectedSets& proj, double step,
    const std::function<bool(const ComplexPoint&, const ComplexPoint&)>& overlap_ok = {});

// Per-run caches: fiber contours and chain verifications keyed by the base
// point quantized to 1e-9. Safe for concurrent insert-or-get; the first
// completed insertion wins, and since construction is deterministic the
// winner does not affect results. A run assumes one fixed f.
class ExtensionRun {
  public:
    ExtensionRun(DomainSpec omega, RemovableSetSpec a, int slot, double eps, double step,
                 ExtensionConfig cfg = {});

    const DomainSpec& omega() const { return omega_; }
    const RemovableSetSpec& removable() const { return a_; }
    int slot() const { return slot_; }
    double eps() const { return eps_; }
    double step() const { return step_; }
    const ExtensionConfig& config() const { return cfg_; }
    const ProjectedSets& projected() const { return proj_; }

    std::shared_ptr<const FiberContour> contour_at(const ComplexPoint& base);

    // Runs path_chain + glue checks + terminal boundary check once per base;
    // returns the chain length. Throws ToleranceError on a failed check.
    int verify_chain(const ExprAst& f, const ComplexPoint& base);

  private:
    using Key = std::vector<std::int64_t>;
    Key key_of(const ComplexPoint& base) const;

    DomainSpec omega_;
    RemovableSetSpec a_;
    int slot_;
    double eps_;
    double step_;
    ExtensionConfig cfg_;
    ProjectedSets proj_;
    std::mutex mutex_;
    std::map<Key, std::shared_ptr<const FiberContour>> contours_;
    std::map<Key, int> verified_;
};

// Samples of the overlap hat-U(z1',z2') usable by glue_check: base point on
// the segment between the two bases, fiber coordinates inside both contours.
std::vector<ComplexPoint> overlap_samples(const RemovableSetSpec& a, const FiberContour& fc1,
                                          const FiberContour& fc2, const DomainSpec& omega,
                                          int count, int fiber_grid = 32);

// Samples of hat-U^b(z_b'): base points pushed off the boundary base toward
// the nearest exterior of pi^i(A), fiber coordinates inside the contour.
// Usable by boundary_coincidence_check since f is defined at every sample.
std::vector<ComplexPoint> boundary_samples(const RemovableSetSpec& a, const DomainSpec& omega,
                                           const ProjectedSets& proj, const FiberContour& fc,
                                           int count, int fiber_grid = 32);

// The public extension operation. Passthrough where f itself is defined and
// no fiber machinery applies; fiber integral (optionally chain-verified)
// above the projection of A.
ExtensionReport extend_at(const ExprAst& f, const DomainSpec& omega,
                          const RemovableSetSpec& a, int slot, const ComplexPoint& z,
                          double eps, double step, const ExtensionConfig& cfg = {},
                          ExtensionRun* run = nullptr);

}  // namespace hartogs
