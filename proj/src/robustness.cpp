#include "cbv/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <Eigen/SVD>

#include "cbv/errors.hpp"

namespace cbv {

std::string_view to_string(NormKind norm) noexcept {
    switch (norm) {
        case NormKind::one: return "1";
        case NormKind::two: return "2";
        case NormKind::inf: return "inf";
    }
    return "inf";
}

NormKind norm_from_string(std::string_view text) {
    if (text == "1") return NormKind::one;
    if (text == "2") return NormKind::two;
    if (text == "inf" || text == "infinity") return NormKind::inf;
    fail(ErrorKind::domain, "norm selector must be 1, 2 or inf");
}

void PerturbationSpec::validate() const {
    if (!(eta >= 0.0) || !(epsilon >= 0.0)) fail(ErrorKind::domain, "perturbation bounds must be >= 0");
}

NormKind dual_norm(NormKind p) noexcept {
    switch (p) {
        case NormKind::one: return NormKind::inf;
        case NormKind::two: return NormKind::two;
        case NormKind::inf: return NormKind::one;
    }
    return NormKind::one;
}

double vector_norm(const Vector& x, NormKind p) {
    if (x.size() == 0) return 0.0;
    switch (p) {
        case NormKind::one: return x.lpNorm<1>();
        case NormKind::two: return x.norm();
        case NormKind::inf: return x.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

double induced_norm(const DenseMatrix& a, NormKind p) {
    if (a.size() == 0) return 0.0;
    const double n1 = a.cwiseAbs().colwise().sum().maxCoeff();
    const double ninf = a.cwiseAbs().rowwise().sum().maxCoeff();
    switch (p) {
        case NormKind::one: return n1;
        case NormKind::inf: return ninf;
        case NormKind::two:
            if (std::max(a.rows(), a.cols()) <= kExactNorm2Limit)
                return Eigen::JacobiSVD<DenseMatrix>(a).singularValues()(0);
            return std::sqrt(n1 * ninf);
    }
    return 0.0;
}

BoundaryBound boundary_bound(const PerturbationSpec& spec, const SparseMatrix& O_PO, std::size_t p_count) {
    spec.validate();
    const NormKind q = dual_norm(spec.p);
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(p_count));
    if (O_PO.rows() != static_cast<Eigen::Index>(p_count)) fail(ErrorKind::validation, "O_PO rows differ from |P|");
    const Vector colsum = DenseMatrix(O_PO).transpose() * ones;
    BoundaryBound out;
    out.bound = vector_norm(ones, q) * spec.eta + vector_norm(colsum, q) * spec.epsilon;
    if (spec.p == NormKind::two)
        out.loose_l2 = std::sqrt(double(p_count)) * (spec.eta + induced_norm(DenseMatrix(O_PO), NormKind::two) * spec.epsilon);
    return out;
}

RegimeBBound regime_b_bound(const PerturbationSpec& spec, const BlockPartition& blocks) {
    spec.validate();
    const auto np = static_cast<Eigen::Index>(blocks.p_ids.size());
    RegimeBBound out;
    out.boundary = boundary_bound(spec, blocks.O_PO, blocks.p_ids.size()).bound;
    const DenseMatrix OPP(blocks.O_PP);
    const DenseMatrix A = DenseMatrix::Identity(np, np) - OPP;
    if (np == 0) {
        out.total = out.boundary;
        return out;
    }
    if (np <= 512) {
        Eigen::FullPivLU<DenseMatrix> lu(A);
        if (!lu.isInvertible()) fail(ErrorKind::stability, "I - O_PP is singular; no inverse-norm bound");
        out.inverse_norm = induced_norm(lu.inverse(), spec.p);
    } else {
        const double m = induced_norm(OPP, spec.p);
        if (m >= 1.0) fail(ErrorKind::stability, "geometric inverse-norm bound unavailable (||O_PP|| >= 1)");
        out.inverse_norm = 1.0 / (1.0 - m);
    }
    Vector delta = DenseMatrix(blocks.O_OP).transpose() * Vector::Ones(static_cast<Eigen::Index>(blocks.o_ids.size()));
    const NormKind q = dual_norm(spec.p);
    out.extension = vector_norm(delta, q) * out.inverse_norm *
                    (spec.eta + induced_norm(DenseMatrix(blocks.O_PO), spec.p) * spec.epsilon);
    out.total = out.boundary + out.extension;
    return out;
}

ConditioningReport condition_diagnostics(const SparseMatrix& O_PP) {
    if (O_PP.rows() != O_PP.cols()) fail(ErrorKind::validation, "conditioning needs a square block");
    ConditioningReport out;
    const auto n = O_PP.rows();
    const SpectralBound b = spectral_radius_bound(O_PP);
    out.rho_estimate = b.power_iteration_estimate;
    if (n == 0) return out;
    if (n <= kExactKappaLimit) {
        const DenseMatrix A = DenseMatrix::Identity(n, n) - DenseMatrix(O_PP);
        const Vector s = Eigen::JacobiSVD<DenseMatrix>(A).singularValues();
        const double smin = s(s.size() - 1);
        out.kappa2 = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
        out.kappa2_exact = true;
    } else {
        // ||I - M||_2 <= 1 + m and ||(I - M)^{-1}||_2 <= 1 / (1 - m), m >= ||M||_2.
        const double m = std::sqrt(b.norm_1 * b.norm_inf);
        out.kappa2 = m < 1.0 ? (1.0 + m) / (1.0 - m) : std::numeric_limits<double>::infinity();
        out.kappa2_exact = false;
    }
    return out;
}

NoiseSpec NoiseSpec::symmetric(double amplitude) {
    NoiseSpec n;
    n.lower = -std::abs(amplitude);
    n.upper = std::abs(amplitude);
    return n;
}

namespace {

struct Slot {
    Eigen::Index row = 0;
    Eigen::Index col = 0;
};

std::vector<Slot> noise_slots(const CutStatistics& stats, const NoiseSpec& noise) {
    std::vector<Slot> slots;
    auto from_matrix = [&](const SparseMatrix& m) {
        if (!noise.mask.empty()) {
            for (auto [r, c] : noise.mask) {
                if (r < 0 || c < 0 || r >= m.rows() || c >= m.cols()) fail(ErrorKind::domain, "noise mask entry out of range");
                slots.push_back({r, c});
            }
            return;
        }
        for (Eigen::Index r = 0; r < m.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(m, r); it; ++it) slots.push_back({it.row(), it.col()});
    };
    auto from_vector = [&](const Vector& v) {
        if (!noise.mask.empty()) {
            for (auto [r, c] : noise.mask) {
                if (r < 0 || r >= v.size()) fail(ErrorKind::domain, "noise mask entry out of range");
                slots.push_back({r, 0});
            }
            return;
        }
        for (Eigen::Index i = 0; i < v.size(); ++i) slots.push_back({i, 0});
    };
    switch (noise.target) {
        case NoiseTarget::O_PP:
            if (!stats.O_PP) fail(ErrorKind::regime, "noise on O_PP needs the internal block");
            from_matrix(*stats.O_PP);
            break;
        case NoiseTarget::O_PO: from_matrix(stats.O_PO); break;
        case NoiseTarget::O_OP: from_matrix(stats.O_OP); break;
        case NoiseTarget::b_P: from_vector(stats.b_P); break;
        case NoiseTarget::v_O: from_vector(stats.v_O); break;
    }
    return slots;
}

void add_to_matrix(SparseMatrix& m, const std::vector<Slot>& slots, const std::vector<double>& deltas) {
    DenseMatrix d(m);
    for (std::size_t k = 0; k < slots.size(); ++k) d(slots[k].row, slots[k].col) += deltas[k];
    m = d.sparseView(0.0, 0.0);
}

CutStatistics perturbed(const CutStatistics& stats, const NoiseSpec& noise, const std::vector<Slot>& slots,
                        const std::vector<double>& deltas) {
    CutStatistics s = stats;
    switch (noise.target) {
        case NoiseTarget::O_PP: add_to_matrix(*s.O_PP, slots, deltas); break;
        case NoiseTarget::O_PO: add_to_matrix(s.O_PO, slots, deltas); break;
        case NoiseTarget::O_OP: add_to_matrix(s.O_OP, slots, deltas); break;
        case NoiseTarget::b_P:
            for (std::size_t k = 0; k < slots.size(); ++k) s.b_P[slots[k].row] += deltas[k];
            break;
        case NoiseTarget::v_O:
            for (std::size_t k = 0; k < slots.size(); ++k) s.v_O[slots[k].row] += deltas[k];
            break;
    }
    return s;
}

double band_quantity(const CutStatistics& stats, const SolverConfig& cfg, BandQuantity quantity) {
    if (stats.O_PP) {
        if (quantity == BandQuantity::internal_total) return estimate_internal_values(stats, cfg).v_P.sum();
        return evaluate_regime_b(stats, cfg).W;
    }
    if (quantity == BandQuantity::internal_total) {
        if (!stats.v_P) fail(ErrorKind::regime, "internal total needs v_P or O_PP");
        return stats.v_P->sum();
    }
    return evaluate_regime_a(stats, cfg.rounding_threshold).W;
}

struct DrawResult {
    double value = 0.0;
    bool ok = false;
};

DrawResult run_draw(const CutStatistics& stats, const SolverConfig& cfg, const NoiseSpec& noise,
                    const std::vector<Slot>& slots, const std::vector<double>& deltas) {
    try {
        return {band_quantity(perturbed(stats, noise, slots, deltas), cfg, noise.quantity), true};
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::stability || e.kind() == ErrorKind::convergence) return {};
        throw;
    }
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

MonteCarloBand monte_carlo_band(const CutStatistics& stats, const SolverConfig& cfg, const NoiseSpec& noise,
                                std::size_t draws, std::uint64_t seed, unsigned threads) {
    if (draws < 1) fail(ErrorKind::domain, "Monte Carlo needs at least one draw");
    if (!(noise.lower <= noise.upper)) fail(ErrorKind::domain, "noise interval must satisfy lower <= upper");
    cfg.validate();
    const std::vector<Slot> slots = noise_slots(stats, noise);

    MonteCarloBand band;
    band.nominal = band_quantity(stats, cfg, noise.quantity);

    auto deltas_for = [&](std::size_t draw) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32)};
        std::mt19937_64 rng(seq);
        std::vector<double> d(slots.size());
        const double width = noise.upper - noise.lower;
        if (noise.common_factor) {
            const double u = noise.lower + width * unit_uniform(rng);
            std::fill(d.begin(), d.end(), u);
        } else {
            for (auto& x : d) x = noise.lower + width * unit_uniform(rng);
        }
        return d;
    };

    std::vector<std::vector<double>> extremes;
    if (noise.include_extremes) {
        extremes.emplace_back(slots.size(), noise.lower);
        extremes.emplace_back(slots.size(), noise.upper);
    }
    const std::size_t total = draws + extremes.size();
    std::vector<DrawResult> results(total);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto d = k < draws ? deltas_for(k) : extremes[k - draws];
            results[k] = run_draw(stats, cfg, noise, slots, d);
        }
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
    if (nthreads == 1) {
        work(0, total);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(nthreads);
        const std::size_t chunk = (total + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::size_t b = t * chunk, e = std::min(total, b + chunk);
            pool.emplace_back([&, t, b, e] {
                try {
                    work(b, e);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    bool any = false;
    for (std::size_t k = 0; k < total; ++k) {
        if (!results[k].ok) {
            ++band.excluded;
            band.excluded_draws.push_back(k);
            continue;
        }
        ++band.evaluated;
        const double v = results[k].value;
        if (!any) {
            band.low = band.high = v;
            any = true;
        } else {
            band.low = std::min(band.low, v);
            band.high = std::max(band.high, v);
        }
    }
    if (!any) band.low = band.high = band.nominal;
    return band;
}

}  // namespace cbv
