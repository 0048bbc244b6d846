// One PASS/FAIL line per acceptance criterion; nonzero exit on any failure.
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "clearing_oracle.hpp"
#include "support.hpp"

#ifndef CBV_FIXTURE_DIR
#error "CBV_FIXTURE_DIR must point at tests/fixtures"
#endif

using namespace cbv;
using namespace cbv::testing;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream why;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) why << what;
        ok = ok && cond;
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream m;
            m.precision(17);
            m << what << ": got " << got << ", want " << want << " +/- " << tol;
            expect(false, m.str());
        }
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------- 1..6

void c1(Check& c) {
    const auto r = evaluate_regime_a(worked_example());
    c.near(r.base_total, 90, 1e-10, "base");
    c.near(r.T_out, 9.6, 1e-10, "T_out");
    c.near(r.T_in, 15.04, 1e-10, "T_in");
    c.near(r.W, 84.56, 1e-10, "W");
}

void c2(Check& c) {
    const auto s = worked_example(false);
    const Vector want = vec({33.8020, 42.0202, 35.3010});
    for (auto m : {SolveMethod::direct, SolveMethod::neumann, SolveMethod::iterative_krylov}) {
        SolverConfig cfg;
        cfg.method = m;
        const auto r = evaluate_regime_b(s, cfg);
        const std::string tag(to_string(m));
        for (Eigen::Index i = 0; i < 3; ++i) c.near(r.v_P_used[i], want[i], 1e-4, tag + " v_P");
        c.near(r.W, 86.5211, 1e-4, tag + " W");
    }
    SolverConfig d, n;
    d.method = SolveMethod::direct;
    n.method = SolveMethod::neumann;
    c.near(evaluate_regime_b(s, d).W, evaluate_regime_b(s, n).W, 1e-8, "direct vs neumann");
}

void c3(Check& c) {
    c.near(evaluate_regime_a(scenario(1)).W, 66.5, 1e-12, "scenario 1");
    c.near(evaluate_regime_a(scenario(2)).W, 74.5, 1e-12, "scenario 2");
}

void c4(Check& c) { c.expect(evaluate_regime_a(t_account()).W == 32.0, "T-account W != 32"); }

void c5(Check& c) {
    c.expect(std::llround(renault_base()) == 6545183676LL, "b_R");
    c.expect(std::llround(nissan_base()) == 5685303429LL, "b_N");
    const double W = evaluate_regime_a(renault_nissan()).W;
    c.expect(W == 7701000000.0, "W(Renault) not exact");
    const double compact = kRenaultValue * (1 - kNissanHoldsRenault);
    c.expect(rel(compact, W) <= 1e-6, "compact form");
}

void c6(Check& c) {
    auto equity_in = [](CutStatistics& s, const char* from, const char* to, double amount) {
        s.flows.push_back({NodeId(from), NodeId(to), EdgeType::equity, amount});
    };
    // Country: only O -> P equity enters; intra-P holdings never appear.
    CutStatistics country;
    country.p_ids = make_ids({"A", "B", "C"});
    country.o_ids = make_ids({"ROW"});
    country.b_P = Vector::Zero(3);
    country.v_O = Vector::Zero(1);
    country.v_P = Vector::Zero(3);
    country.O_PO = SparseMatrix(3, 1);
    country.O_OP = SparseMatrix(1, 3);
    equity_in(country, "ROW", "A", 90e9);
    equity_in(country, "ROW", "B", 70e9);
    equity_in(country, "ROW", "C", 45e9);
    const auto rc = evaluate_regime_a(country);
    const double gmc = 120e9 + 80e9 + 50e9;
    c.expect(rc.T_in == 205e9, "country NMC");
    c.expect(gmc == 250e9, "country GMC");
    c.expect(gmc - rc.T_in == 45e9, "country gap");

    CutStatistics pyr;
    pyr.p_ids = make_ids({"B", "C", "H"});
    pyr.o_ids = make_ids({"O"});
    pyr.b_P = Vector::Zero(3);
    pyr.v_O = Vector::Zero(1);
    pyr.v_P = Vector::Zero(3);
    pyr.O_PO = SparseMatrix(3, 1);
    pyr.O_OP = SparseMatrix(1, 3);
    pyr.O_PP = sparse(mat(3, 3, {0, 0.2, 0, 0, 0, 0, 0.6, 0.51, 0}));
    equity_in(pyr, "O", "H", 15);
    equity_in(pyr, "O", "B", 25);
    equity_in(pyr, "O", "C", 10);
    pyr.flows.push_back({NodeId("B"), NodeId("O"), EdgeType::debt, 5});
    const auto rp = evaluate_regime_a(pyr);
    c.expect(rp.T_in == 50 && rp.T_out == 5, "pyramid totals");

    CutStatistics fof;
    fof.p_ids = make_ids({"F", "U1", "U2"});
    fof.o_ids = make_ids({"EXT"});
    fof.b_P = Vector::Zero(3);
    fof.v_O = Vector::Zero(1);
    fof.v_P = Vector::Zero(3);
    fof.O_PO = SparseMatrix(3, 1);
    fof.O_OP = SparseMatrix(1, 3);
    equity_in(fof, "EXT", "U1", 15e9);
    equity_in(fof, "EXT", "U2", 20e9);
    equity_in(fof, "EXT", "F", 35e9);
    const double gross = 40e9 + 30e9 + 35e9;
    c.expect(evaluate_regime_a(fof).T_in == 70e9, "FoF net");
    c.expect(gross == 105e9, "FoF gross");
}

// ---------------------------------------------------------------- 7, 8

CutStatistics random_instance(std::mt19937_64& rng, Eigen::Index np, Eigen::Index no, double share_max) {
    std::uniform_real_distribution<double> sh(0.0, share_max), val(1.0, 100.0);
    CutStatistics s;
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < np; ++i) names.push_back("p" + std::to_string(i));
    for (const auto& n : names) s.p_ids.push_back(NodeId(n));
    for (Eigen::Index k = 0; k < no; ++k) s.o_ids.push_back(NodeId("o" + std::to_string(k)));
    s.b_P.resize(np);
    s.v_O.resize(no);
    for (auto& x : s.b_P) x = val(rng);
    for (auto& x : s.v_O) x = val(rng);
    DenseMatrix po(np, no), op(no, np), pp(np, np);
    for (Eigen::Index i = 0; i < po.size(); ++i) po.data()[i] = sh(rng);
    for (Eigen::Index i = 0; i < op.size(); ++i) op.data()[i] = sh(rng);
    for (Eigen::Index i = 0; i < pp.size(); ++i) pp.data()[i] = sh(rng);
    pp.diagonal().setZero();
    s.O_PO = sparse(po);
    s.O_OP = sparse(op);
    s.O_PP = sparse(pp);
    Vector v(np);
    for (auto& x : v) x = val(rng);
    s.v_P = v;
    return s;
}

void c7(Check& c) {
    std::mt19937_64 rng(7001);
    std::uniform_real_distribution<double> sh(0.0, 0.2);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int inst = 0; inst < 100; ++inst) {
        auto s = random_instance(rng, dim(rng), dim(rng), 0.15);
        const double W = evaluate_regime_a(s).W;
        DenseMatrix M(s.p_ids.size(), s.p_ids.size());
        for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = sh(rng);
        M.diagonal().setZero();
        s.O_PP = sparse(M);
        if (evaluate_regime_a(s).W != W) {
            c.expect(false, "regime A rewiring changed W");
            return;
        }
    }
    // Regime B gauge: R' = R + Delta with Delta O_PO = 0 and O_OP Delta = 0
    // keeps T_PO = R O_PO and U_OP = O_OP R, hence W.
    std::uniform_real_distribution<double> z(-1.0, 1.0);
    for (int inst = 0; inst < 100; ++inst) {
        auto s = random_instance(rng, 6, 2, 0.12);
        s.v_P.reset();
        const DenseMatrix Opp(*s.O_PP), Opo(s.O_PO), Oop(s.O_OP);
        const DenseMatrix I = DenseMatrix::Identity(6, 6);
        const DenseMatrix R = (I - Opp).inverse();
        const DenseMatrix A = Eigen::FullPivLU<DenseMatrix>(Oop).kernel();                    // 6 x 4
        const DenseMatrix B = Eigen::FullPivLU<DenseMatrix>(Opo.transpose()).kernel().transpose();  // 4 x 6
        DenseMatrix Z(A.cols(), B.rows());
        for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = z(rng);
        DenseMatrix D = A * Z * B;
        D *= 0.05 / std::max(D.cwiseAbs().maxCoeff(), 1e-300);
        const DenseMatrix R2 = R + D;
        const DenseMatrix M2 = I - R2.inverse();
        auto t = s;
        t.O_PP = sparse(M2);
        const double W = evaluate_regime_b(s, {}).W;
        SolverConfig cfg;
        cfg.method = SolveMethod::direct;
        double W2 = 0;
        try {
            W2 = evaluate_regime_b(t, cfg).W;
        } catch (const Error& e) {
            c.expect(false, std::string("gauge instance rejected: ") + e.what());
            return;
        }
        if ((M2 - Opp).cwiseAbs().maxCoeff() < 1e-6) {
            c.expect(false, "gauge did not change O_PP");
            return;
        }
        if (rel(W2, W) >= 1e-9) {
            c.near(W2, W, 1e-9 * std::abs(W), "regime B gauge");
            return;
        }
    }
}

void c8(Check& c) {
    const auto a = worked_example();
    const auto b = worked_example(false);
    const auto rn = renault_nissan();
    const double Wa = evaluate_regime_a(a).W, Wb = evaluate_regime_b(b, {}).W, Wr = evaluate_regime_a(rn).W;
    for (double k : {0.5, 1.2, 3.0}) {
        c.expect(rel(evaluate_regime_a(scale_units(k, a)).W, k * Wa) <= 1e-12, "regime A scaling");
        c.expect(rel(evaluate_regime_b(scale_units(k, b), {}).W, k * Wb) <= 1e-12, "regime B scaling");
        c.expect(rel(evaluate_regime_a(scale_units(k, rn)).W, k * Wr) <= 1e-12, "Renault scaling");
    }
}

// ---------------------------------------------------------------- 9, 10

CutStatistics symmetric_pair(double t) {
    CutStatistics s;
    s.p_ids = make_ids({"P1", "P2"});
    s.o_ids = make_ids({"O1"});
    s.b_P = vec({75, 75});
    s.v_O = vec({0});
    s.O_PO = SparseMatrix(2, 1);
    s.O_OP = SparseMatrix(1, 2);
    s.O_PP = sparse(mat(2, 2, {0, t, t, 0}));
    return s;
}

void c9(Check& c) {
    c.near(condition_diagnostics(*symmetric_pair(0.8).O_PP).kappa2, 9.0, 0.5, "kappa2(0.80)");
    c.near(condition_diagnostics(*symmetric_pair(0.99).O_PP).kappa2, 199.0, 0.5, "kappa2(0.99)");
    c.near(evaluate_regime_b(symmetric_pair(0.8), {}).v_P_used.sum(), 750.0, 1e-3, "total(0.80)");
    c.near(evaluate_regime_b(symmetric_pair(0.99), {}).v_P_used.sum(), 15000.0, 1e-3, "total(0.99)");
    NoiseSpec noise;
    noise.lower = -0.01;
    noise.upper = 0.01;
    noise.common_factor = true;
    noise.quantity = BandQuantity::internal_total;
    const auto band = monte_carlo_band(symmetric_pair(0.8), {}, noise, 200, 42);
    c.near(band.low, 714.2857, 1e-3, "band low");
    c.near(band.high, 789.4737, 1e-3, "band high");
    noise.lower = 0.0;
    const auto near = monte_carlo_band(symmetric_pair(0.98), {}, noise, 50, 42);
    c.near(near.low, 7500, 1e-3, "span low");
    c.near(near.high, 15000, 1e-3, "span high");
}

void c10(Check& c) {
    std::mt19937_64 rng(1010);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> u(-1.0, 1.0), r01(0.0, 1.0), mag(0.1, 5.0);
    auto draw = [&](Eigen::Index n, NormKind p, double radius) {
        Vector x(n);
        for (auto& e : x) e = u(rng);
        const double nx = vector_norm(x, p);
        if (nx == 0) return Vector(Vector::Zero(n));
        // Half the draws sit on the sphere, half inside the ball.
        const double scale = r01(rng) < 0.5 ? 1.0 : r01(rng);
        return Vector(x * (radius * scale / nx));
    };
    std::size_t trials = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const auto np = dim(rng), no = dim(rng);
        auto s = random_instance(rng, np, no, 0.15);
        BlockPartition blocks;
        blocks.p_ids = s.p_ids;
        blocks.o_ids = s.o_ids;
        blocks.O_PP = *s.O_PP;
        blocks.O_PO = s.O_PO;
        blocks.O_OP = s.O_OP;
        blocks.O_OO = SparseMatrix(no, no);
        auto sb = s;
        sb.v_P.reset();
        const double WA = evaluate_regime_a(s).W;
        const double WB = evaluate_regime_b(sb, {}).W;
        for (auto p : {NormKind::one, NormKind::two, NormKind::inf}) {
            const PerturbationSpec spec{p, mag(rng), mag(rng)};
            const double boundA = boundary_bound(spec, s.O_PO, np).bound;
            const double boundB = regime_b_bound(spec, blocks).total;
            for (int k = 0; k < 1000; ++k) {
                const Vector db = draw(np, p, spec.eta);
                const Vector dv = draw(no, p, spec.epsilon);
                auto t = s;
                t.b_P += db;
                t.v_O += dv;
                auto tb = sb;
                tb.b_P += db;
                tb.v_O += dv;
                const double dA = std::abs(evaluate_regime_a(t).W - WA);
                const double dB = std::abs(evaluate_regime_b(tb, {}).W - WB);
                ++trials;
                if (dA > boundA * (1 + 1e-12) + 1e-12) {
                    c.near(dA, boundA, 0, std::string("regime A bound, p=") + std::string(to_string(p)));
                    return;
                }
                if (dB > boundB * (1 + 1e-12) + 1e-12) {
                    c.near(dB, boundB, 0, std::string("regime B bound, p=") + std::string(to_string(p)));
                    return;
                }
            }
        }
    }
    c.expect(trials == 150000, "trial count");
}

// ---------------------------------------------------------------- 11, 12

void c11(Check& c) {
    const auto three = OwnershipNetwork::from_entries(make_ids({"J", "O1", "O2", "O3"}),
                                                      {{NodeId("O1"), NodeId("J"), 0.6},
                                                       {NodeId("O2"), NodeId("J"), 0.3},
                                                       {NodeId("O3"), NodeId("J"), 0.1}});
    const auto a = threshold_control(three, 0.5);
    c.expect(a.at(NodeId("O1"), NodeId("J")) == 1.0 && a.at(NodeId("O2"), NodeId("J")) == 0.0 &&
                 a.at(NodeId("O3"), NodeId("J")) == 0.0,
             "option A");
    const auto b = herfindahl_control(three, HerfindahlVariant::B);
    const double H = 0.6 * 0.6 + 0.3 * 0.3 + 0.1 * 0.1;
    c.near(H, 0.46, 1e-12, "H");
    c.near(b.at(NodeId("O1"), NodeId("J")), 0.276, 1e-3, "omega O1");
    c.near(b.at(NodeId("O2"), NodeId("J")), 0.138, 1e-3, "omega O2");
    c.near(b.at(NodeId("O3"), NodeId("J")), 0.046, 1e-3, "omega O3");
    const auto pyr = OwnershipNetwork::from_entries(make_ids({"H", "B", "C", "X"}),
                                                    {{NodeId("H"), NodeId("B"), 0.60},
                                                     {NodeId("H"), NodeId("C"), 0.51},
                                                     {NodeId("B"), NodeId("C"), 0.20},
                                                     {NodeId("C"), NodeId("H"), 0.10}});
    const DenseMatrix S = dense_shares(pyr);
    for (double alpha : {0.3, 0.6, 0.9}) {
        const auto closed = attenuated_control(pyr, alpha).weights;
        for (int K = 1; K <= 20; ++K) {
            const double gap = (closed - attenuated_series(S, alpha, K)).cwiseAbs().rowwise().sum().maxCoeff();
            c.expect(gap <= attenuated_tail_bound(S, alpha, K) + 1e-14, "option C tail bound");
        }
    }
}

void c12(Check& c) {
    const std::vector<double> p0{10, 5}, p1{8 / 1.2, 5}, q0{1, 2}, q1{1.5, 1.5};
    const auto b = bilateral_goods_index(p0, p1, q0, q1);
    c.near(b.L, 0.833, 5e-4, "L");
    c.near(b.P, 0.778, 5e-4, "P");
    c.near(b.F, 0.805, 5e-4, "F");
    std::vector<double> s0, s1;
    for (double x : p0) s0.push_back(1.2 * x);
    for (double x : p1) s1.push_back(1.2 * x);
    const auto r = bilateral_goods_index(s0, s1, q0, q1);
    c.expect(rel(r.L, b.L) <= 1e-12 && rel(r.P, b.P) <= 1e-12 && rel(r.F, b.F) <= 1e-12, "rescale invariance");

    const Observer o = worked_observer(Regime::A);
    auto curr = worked_example();
    curr.b_P *= 1.1;
    curr.v_O *= 1.05;
    const auto quad = cross_priced_quad(worked_example(), curr, o, o, {});
    const auto f = fisher_combine(elementary_indices(quad));
    c.expect(f.IP_L == 1.0 && f.IP_P == 1.0 && f.IP_F == 1.0, "identical observers");
    c.expect(rel(f.G_F, quad.W_curr_currObs / quad.W_prev_prevObs) <= 1e-12, "G_F identity");
    c.expect(rel(f.IV_F * f.IP_F, f.G_F) <= 1e-12, "G_F = IV_F IP_F");

    const std::vector<double> g{1.1, 0.95, 1.2, 1.03};
    const auto levels = chain_link(g);
    c.expect(levels.size() == 5 && levels.front() == 1.0, "chain start");
    for (std::size_t t = 1; t < levels.size(); ++t)
        c.expect(rel(levels[t] / levels[t - 1], g[t - 1]) <= 1e-12, "chain telescoping");
}

// ---------------------------------------------------------------- 13..16

void c13(Check& c) {
    std::mt19937_64 rng(1313);
    std::uniform_int_distribution<int> due(0, 6), res(0, 8);
    std::uniform_real_distribution<double> g(0.0, 0.6);
    const double step = 0.25, tol = 1e-9;
    std::vector<ClearingProblem> cases{ring3(10, vec({3, 1, 0}), 0.5), ring3(10, vec({0, 0, 0}), 0.0)};
    for (int trial = 0; trial < 40; ++trial) {
        ClearingProblem p;
        p.nodes = make_ids({"a", "b", "c"});
        DenseMatrix L = DenseMatrix::Zero(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) L(i, j) = due(rng);
        p.classes = {L};
        p.a = vec({double(res(rng)), double(res(rng)), double(res(rng))});
        p.gamma = {vec({g(rng), g(rng), g(rng)})};
        cases.push_back(p);
    }
    for (const auto& p : cases) {
        ClearingConfig cfg;
        cfg.record_trace = true;
        const auto hi = clear(p, cfg);
        cfg.selection = FixedPointSelection::least;
        const auto lo = clear(p, cfg);
        const auto oracle = lattice_search(p, step);
        const auto exact = enumerate_fixed_points(p);
        c.expect(((hi.payments[0] - oracle.sup_post).array() >= -tol).all(), "greatest below a post-fixed grid point");
        c.expect(((oracle.inf_pre - lo.payments[0]).array() >= -tol).all(), "least above a pre-fixed grid point");
        c.expect(!exact.all.empty(), "no exact fixed point");
        if (exact.all.empty()) continue;
        c.expect((hi.payments[0] - exact.greatest).cwiseAbs().maxCoeff() < 1e-7, "greatest vs exact oracle");
        c.expect((lo.payments[0] - exact.least).cwiseAbs().maxCoeff() < 1e-7, "least vs exact oracle");
        for (const auto& fp : oracle.fixed_points)
            c.expect(((fp - hi.payments[0]).array() <= tol).all() && ((lo.payments[0] - fp).array() <= tol).all(),
                     "oracle fixed point outside [least, greatest]");
        for (std::size_t k = 1; k < hi.trace.size(); ++k)
            c.expect(((hi.trace[k][0] - hi.trace[k - 1][0]).array() <= 1e-12).all(), "monotone from above");
        for (std::size_t k = 1; k < lo.trace.size(); ++k)
            c.expect(((lo.trace[k][0] - lo.trace[k - 1][0]).array() >= -1e-12).all(), "monotone from below");
    }
    const auto ring = ring3(10, vec({3, 1, 0}), 0.5);
    c.near(clear(ring).payments[0].sum(), 30, 1e-9, "ring greatest");

    // Rewiring internal debt leaves the net boundary flows unchanged.
    ClearingProblem p;
    p.nodes = make_ids({"a", "b", "x"});
    p.classes = {mat(3, 3, {0, 5, 4, 0, 0, 3, 2, 1, 0})};
    p.a = vec({20, 20, 20});
    const auto net = net_boundary_flows(p, clear(p), Perimeter{"a", "b"});
    auto q = p;
    q.classes[0](0, 1) = 0;
    q.classes[0](1, 0) = 7;
    const auto net2 = net_boundary_flows(q, clear(q), Perimeter{"a", "b"});
    c.expect(net.X_PO == net2.X_PO && net.X_OP == net2.X_OP, "post-clearing rewiring invariance");
}

void c14(Check& c) {
    const double eps[] = {0.05, 0.02, 0.01, 0.005, 0.001};
    const double gam[] = {0.5, 1, 2, 5};
    const double D[5][4] = {{.8944, .6325, .4472, .2828},
                            {.5657, .4000, .2828, .1789},
                            {.4000, .2828, .2000, .1265},
                            {.2828, .2000, .1414, .0894},
                            {.1265, .0894, .0632, .0400}};
    const long long N[5][4] = {{2, 2, 3, 4}, {2, 3, 4, 6}, {3, 4, 5, 8}, {4, 5, 8, 12}, {8, 12, 16, 25}};
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) {
            const auto d = delta_max(eps[i], gam[j]);
            c.near(d.delta, D[i][j], 1e-4, "delta_max");
            c.expect(d.segments == N[i][j], "segment count");
        }
    for (double e : eps)
        for (double gm : gam) {
            // f = (gm/2) x^2 has f'' = gm.
            const auto d = delta_max(e, gm);
            std::vector<std::pair<double, double>> samples;
            for (long long k = 0; k <= d.segments; ++k) {
                const double x = double(k) / double(d.segments);
                samples.emplace_back(x, 0.5 * gm * x * x);
            }
            const auto f = pwa_build(samples);
            const double h = 1.0 / double(d.segments);
            for (int k = 0; k <= 2000; ++k) {
                const double x = k / 2000.0;
                c.expect(std::abs(f(x) - 0.5 * gm * x * x) <= gm * h * h / 8 + 1e-15, "interpolation bound");
            }
        }
    const auto w1 = eval_waterfall(60, 100), w2 = eval_waterfall(90, 100), w3 = eval_waterfall(150, 100);
    c.expect(w1.senior == 60 && w1.junior == 0, "waterfall 60");
    c.expect(w2.senior == 90 && w2.junior == 0, "waterfall 90");
    c.expect(w3.senior == 100 && w3.junior == 50, "waterfall 150");
}

void c15(Check& c) {
    const std::vector<double> v{-1, 59, 89}, p{0.95, 0.04, 0.01};
    const std::vector<std::string> labels{"no_default", "default_recovery", "default_trigger"};
    const double e = aggregate(v, p, labels, {});
    c.near(e, 2.30, 1e-12, "expectation");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", e);
    c.expect(std::string(buf) == "2.30", "expectation at two decimals");
    AggregatorPolicy cv;
    cv.kind = AggregatorKind::cvar;
    cv.alpha = 0.95;
    c.expect(aggregate(v, p, labels, cv) == -1.0, "CVaR_0.95");

    std::mt19937_64 rng(1515);
    std::uniform_real_distribution<double> u(-10, 10), pos(0.0, 3.0);
    std::vector<AggregatorPolicy> policies(4);
    policies[1].kind = AggregatorKind::cvar;
    policies[1].alpha = 0.9;
    policies[2].kind = AggregatorKind::kusuoka_mix;
    policies[2].mu = {{0.5, 0.3}, {0.9, 0.7}};
    policies[3].kind = AggregatorKind::worst_case;
    const std::vector<double> q{0.1, 0.2, 0.3, 0.25, 0.15};
    const std::vector<std::string> l5{"s1", "s2", "s3", "s4", "s5"};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> x(5), y(5), z(5);
        const double k = u(rng);
        for (int i = 0; i < 5; ++i) {
            x[i] = u(rng);
            y[i] = x[i] + pos(rng);
            z[i] = x[i] + k;
        }
        for (const auto& pol : policies) {
            const double ax = aggregate(x, q, l5, pol);
            c.expect(aggregate(y, q, l5, pol) >= ax - 1e-12, "monotonicity");
            c.expect(std::abs(aggregate(z, q, l5, pol) - (ax + k)) <= 1e-12 * std::max(1.0, std::abs(ax + k)),
                     "translation invariance");
        }
    }
}

void c16(Check& c) {
    for (auto regime : {Regime::A, Regime::B}) {
        const auto pkg = worked_example_package(regime);
        const auto dir = scratch_dir(std::string("acceptance-") + std::string(to_string(regime)));
        auto expected = pkg;
        expected.manifest = write_package(dir, pkg);
        const auto loaded = load_package(dir);
        c.expect(loaded == expected, "round-trip equality");
        const auto bytes = read_file(dir / "manifest.yaml");
        write_package(dir, loaded);
        c.expect(read_file(dir / "manifest.yaml") == bytes, "re-emission");
    }
    const auto dir = scratch_dir("acceptance-corrupt");
    write_package(dir, renault_package());
    auto bytes = read_file(dir / "O_OP.csv");
    bytes[bytes.size() / 2] ^= 0x04;
    write_file(dir / "O_OP.csv", bytes);
    bool caught = false;
    try {
        load_package(dir);
    } catch (const IntegrityError& e) {
        caught = e.file() == "O_OP.csv";
    }
    c.expect(caught, "corruption not detected");

    auto noopp = worked_example_package(Regime::B);
    noopp.O_PP.reset();
    const auto dir2 = scratch_dir("acceptance-noopp");
    write_package(dir2, noopp);
    bool rejected = false;
    try {
        load_package(dir2);
    } catch (const Error& e) {
        rejected = e.kind() == ErrorKind::package;
    }
    c.expect(rejected, "regime B without O_PP accepted");

    const auto doc = parse_cut_summary(read_file(std::filesystem::path(CBV_FIXTURE_DIR) / "schema_cut_summary.json"));
    c.expect(doc.T_out == 123.45 && doc.T_in == 67.89 && doc.consolidated_value == 55.56, "schema totals");
    const auto again = parse_cut_summary(render_cut_summary(doc));
    c.expect(again == doc, "schema fixture re-emission");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"worked example, regime A", c1},
        {"worked example, regime B", c2},
        {"assumption scenarios", c3},
        {"T-account", c4},
        {"Renault-Nissan", c5},
        {"case-study totals", c6},
        {"cut invariance under internal rewiring", c7},
        {"scaling equivariance", c8},
        {"conditioning", c9},
        {"robustness bound soundness", c10},
        {"control rules", c11},
        {"Fisher protocol", c12},
        {"clearing", c13},
        {"PWA and waterfall", c14},
        {"aggregation", c15},
        {"package integrity", c16},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first;
        if (!c.ok) std::cout << " (" << c.why.str() << ")";
        std::cout << '\n';
        failures += c.ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
