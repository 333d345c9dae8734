#include "rohm/attacks.hpp"
#include "rohm/target.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rohm {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw usage_error("pearson-args", "need two equal-length vectors, N >= 2");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    double vx = double(n) * sxx - sx * sx;
    double vy = double(n) * syy - sy * sy;
    if (vx <= 0.0 || vy <= 0.0)
        return 0.0; // zero-variance convention
    return (double(n) * sxy - sx * sy) / std::sqrt(vx * vy);
}

DmCurve dm_curve(const TraceSet& ts, std::span<const uint8_t> labels, std::size_t bit_index) {
    if (labels.size() != ts.n_traces)
        throw usage_error("dm-args", "label count must match trace count");
    const std::size_t F = ts.n_points;
    std::vector<double> s0(F, 0.0), s1(F, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < ts.n_traces; ++i) {
        auto row = ts.row(i);
        auto& s = labels[i] ? s1 : s0;
        (labels[i] ? n1 : n0)++;
        for (std::size_t f = 0; f < F; ++f)
            s[f] += row[f];
    }
    if (n0 == 0 || n1 == 0)
        throw data_error("degenerate-partition", "one label class is empty");
    DmCurve curve;
    curve.target_bit = bit_index;
    curve.values.resize(F);
    for (std::size_t f = 0; f < F; ++f)
        curve.values[f] = std::abs(s0[f] / double(n0) - s1[f] / double(n1));
    return curve;
}

std::vector<BitTemplate> tima_profile(const TraceSet& profiling, int k_points) {
    if (k_points < 1)
        throw usage_error("tima-args", "k_points must be >= 1");
    if (profiling.n_label_bits == 0)
        throw usage_error("tima-args", "profiling set carries no bit labels");
    const std::size_t B = profiling.n_label_bits;
    const std::size_t F = profiling.n_points;
    const std::size_t N = profiling.n_traces;
    std::vector<BitTemplate> out(B);
    std::vector<uint8_t> degenerate(B, 0);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> s0(F, 0.0), s1(F, 0.0), q0(F, 0.0), q1(F, 0.0);
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            bool one = profiling.bit_labels[i * B + b] != 0;
            auto row = profiling.row(i);
            auto& s = one ? s1 : s0;
            auto& q = one ? q1 : q0;
            (one ? n1 : n0)++;
            for (std::size_t f = 0; f < F; ++f) {
                s[f] += row[f];
                q[f] += double(row[f]) * row[f];
            }
        }
        if (n0 == 0 || n1 == 0) {
            degenerate[b] = 1;
            continue;
        }
        BitTemplate t;
        t.mean0.resize(F);
        t.mean1.resize(F);
        t.pooled_var.resize(F);
        std::vector<double> dm(F);
        for (std::size_t f = 0; f < F; ++f) {
            t.mean0[f] = s0[f] / double(n0);
            t.mean1[f] = s1[f] / double(n1);
            double ss0 = q0[f] - s0[f] * s0[f] / double(n0);
            double ss1 = q1[f] - s1[f] * s1[f] / double(n1);
            double dof = double(n0 + n1) - 2.0;
            t.pooled_var[f] = std::max((ss0 + ss1) / std::max(dof, 1.0), 1e-24);
            dm[f] = std::abs(t.mean0[f] - t.mean1[f]);
        }
        std::vector<int> idx(F);
        std::iota(idx.begin(), idx.end(), 0);
        int k = std::min<std::size_t>(std::size_t(k_points), F);
        std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                          [&](int a, int c) { return dm[a] > dm[c]; });
        t.selected_points.assign(idx.begin(), idx.begin() + k);
        out[b] = std::move(t);
    }
    for (std::size_t b = 0; b < B; ++b)
        if (degenerate[b])
            throw data_error("degenerate-partition",
                             "bit " + std::to_string(b) + " has only one class");
    return out;
}

TimaResult tima_attack(const std::vector<BitTemplate>& templates, const TraceSet& attack) {
    if (templates.empty())
        throw usage_error("tima-args", "no templates");
    if (templates.front().mean0.size() != attack.n_points)
        throw usage_error("grid-mismatch", "templates and traces use different grids");
    const std::size_t B = templates.size();
    const std::size_t N = attack.n_traces;
    TimaResult res;
    res.templates = templates;
    res.per_trace_guess.assign(B, std::vector<uint8_t>(N, 0));
    res.per_bit_accuracy.assign(B, 0.0);
    res.majority_guess.assign(B, 0);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = 0; b < B; ++b) {
        const BitTemplate& t = templates[b];
        std::size_t correct = 0, ones = 0;
        for (std::size_t i = 0; i < N; ++i) {
            auto row = attack.row(i);
            double ll0 = 0.0, ll1 = 0.0;
            for (int p : t.selected_points) {
                double inv = 1.0 / t.pooled_var[p];
                double d0 = row[p] - t.mean0[p];
                double d1 = row[p] - t.mean1[p];
                ll0 -= 0.5 * d0 * d0 * inv;
                ll1 -= 0.5 * d1 * d1 * inv;
            }
            uint8_t guess = ll1 > ll0 ? 1 : 0;
            res.per_trace_guess[b][i] = guess;
            ones += guess;
            if (attack.n_label_bits == B && guess == attack.bit_labels[i * B + b])
                ++correct;
        }
        res.per_bit_accuracy[b] = N ? double(correct) / double(N) : 0.0;
        res.majority_guess[b] = ones * 2 > N ? 1 : 0;
    }
    return res;
}

namespace {

// Per-plaintext-value trace aggregation: every statistic below is a linear
// functional of these group sums, which cuts the 256-guess sweep from
// O(256*N*F) to O(N*F + 256*256*F).
struct GroupSums {
    std::size_t n = 0;
    std::array<std::size_t, 256> counts{};
    std::vector<double> sums;    // 256 x F
    std::vector<double> tot;     // F
    std::vector<double> tot_sq;  // F
    std::size_t F = 0;

    explicit GroupSums(std::size_t n_points) : F(n_points) {
        sums.assign(256 * F, 0.0);
        tot.assign(F, 0.0);
        tot_sq.assign(F, 0.0);
    }

    void add_trace(uint8_t plaintext, std::span<const float> row) {
        ++n;
        ++counts[plaintext];
        double* s = sums.data() + std::size_t(plaintext) * F;
        for (std::size_t f = 0; f < F; ++f) {
            double v = row[f];
            s[f] += v;
            tot[f] += v;
            tot_sq[f] += v * v;
        }
    }
};

void check_nonprofiled(const TraceSet& ts) {
    if (ts.plaintexts.size() != ts.n_traces)
        throw usage_error("attack-args", "trace set carries no plaintext labels");
    if (ts.n_traces < 2)
        throw usage_error("attack-args", "need at least 2 traces");
}

std::vector<double> cima_row(const GroupSums& g, uint8_t guess) {
    const std::size_t F = g.F;
    double sh = 0.0, shh = 0.0;
    std::array<double, 256> h{};
    for (int p = 0; p < 256; ++p) {
        h[p] = double(hamming_weight(first_round_intermediate(uint8_t(p), guess)));
        sh += double(g.counts[p]) * h[p];
        shh += double(g.counts[p]) * h[p] * h[p];
    }
    double n = double(g.n);
    double vh = n * shh - sh * sh;
    std::vector<double> out(F, 0.0);
    if (vh <= 0.0)
        return out;
    std::vector<double> sht(F, 0.0);
    for (int p = 0; p < 256; ++p) {
        if (g.counts[p] == 0)
            continue;
        const double* s = g.sums.data() + std::size_t(p) * F;
        for (std::size_t f = 0; f < F; ++f)
            sht[f] += h[p] * s[f];
    }
    for (std::size_t f = 0; f < F; ++f) {
        double vt = n * g.tot_sq[f] - g.tot[f] * g.tot[f];
        if (vt <= 0.0)
            continue;
        out[f] = (n * sht[f] - sh * g.tot[f]) / std::sqrt(vh * vt);
    }
    return out;
}

std::vector<double> dima_row(const GroupSums& g, uint8_t guess, int* degenerate) {
    const std::size_t F = g.F;
    std::vector<double> out(F, 0.0);
    for (int b = 0; b < 8; ++b) {
        std::size_t n1 = 0;
        std::vector<double> s1(F, 0.0);
        for (int p = 0; p < 256; ++p) {
            if (g.counts[p] == 0)
                continue;
            if ((first_round_intermediate(uint8_t(p), guess) >> b) & 1) {
                n1 += g.counts[p];
                const double* s = g.sums.data() + std::size_t(p) * F;
                for (std::size_t f = 0; f < F; ++f)
                    s1[f] += s[f];
            }
        }
        std::size_t n0 = g.n - n1;
        if (n0 == 0 || n1 == 0) {
            if (degenerate)
                ++*degenerate;
            continue;
        }
        for (std::size_t f = 0; f < F; ++f)
            out[f] += std::abs(s1[f] / double(n1) - (g.tot[f] - s1[f]) / double(n0));
    }
    for (std::size_t f = 0; f < F; ++f)
        out[f] /= 8.0;
    return out;
}

void finalize_report(AttackReport& rep, uint8_t true_key) {
    std::array<double, 256> best{};
    for (int k = 0; k < 256; ++k) {
        double m = 0.0;
        for (double v : rep.statistic_matrix[k])
            m = std::max(m, std::abs(v));
        best[k] = m;
    }
    rep.best_guess = uint8_t(std::max_element(best.begin(), best.end()) - best.begin());
    rep.max_true_stat = best[true_key];
    rep.max_wrong_stat = 0.0;
    int rank = 1;
    for (int k = 0; k < 256; ++k) {
        if (k == true_key)
            continue;
        rep.max_wrong_stat = std::max(rep.max_wrong_stat, best[k]);
        if (best[k] > best[true_key])
            ++rank;
    }
    rep.key_rank = rank;
}

} // namespace

AttackReport cima(const TraceSet& ts, uint8_t true_key) {
    check_nonprofiled(ts);
    GroupSums g(ts.n_points);
    for (std::size_t i = 0; i < ts.n_traces; ++i)
        g.add_trace(ts.plaintexts[i], ts.row(i));
    AttackReport rep;
    rep.statistic_matrix.resize(256);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < 256; ++k)
        rep.statistic_matrix[k] = cima_row(g, uint8_t(k));
    finalize_report(rep, true_key);
    return rep;
}

AttackReport dima(const TraceSet& ts, uint8_t true_key) {
    check_nonprofiled(ts);
    GroupSums g(ts.n_points);
    for (std::size_t i = 0; i < ts.n_traces; ++i)
        g.add_trace(ts.plaintexts[i], ts.row(i));
    AttackReport rep;
    rep.statistic_matrix.resize(256);
    std::vector<int> degen(256, 0);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < 256; ++k)
        rep.statistic_matrix[k] = dima_row(g, uint8_t(k), &degen[k]);
    rep.degenerate_partitions = std::accumulate(degen.begin(), degen.end(), 0);
    finalize_report(rep, true_key);
    return rep;
}

AttackReport progressive_leakage(const TraceSet& ts, AttackMethod method, uint8_t true_key,
                                 const std::vector<std::size_t>& checkpoints) {
    check_nonprofiled(ts);
    if (checkpoints.empty() || !std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        checkpoints.back() > ts.n_traces)
        throw usage_error("checkpoints", "checkpoints must be ascending and <= n_traces");

    AttackReport rep;
    rep.checkpoints = checkpoints;
    GroupSums g(ts.n_points);
    std::size_t next_trace = 0;
    std::vector<int> degen(256, 0);
    for (std::size_t cp : checkpoints) {
        while (next_trace < cp) {
            g.add_trace(ts.plaintexts[next_trace], ts.row(next_trace));
            ++next_trace;
        }
        std::vector<std::vector<double>> mat(256);
        std::fill(degen.begin(), degen.end(), 0);
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < 256; ++k)
            mat[k] = method == AttackMethod::Cima ? cima_row(g, uint8_t(k))
                                                  : dima_row(g, uint8_t(k), &degen[k]);
        std::vector<double> best(256, 0.0);
        for (int k = 0; k < 256; ++k)
            for (double v : mat[k])
                best[k] = std::max(best[k], std::abs(v));
        rep.progressive.push_back(std::move(best));
        if (cp == checkpoints.back()) {
            rep.statistic_matrix = std::move(mat);
            rep.degenerate_partitions = std::accumulate(degen.begin(), degen.end(), 0);
        }
    }
    finalize_report(rep, true_key);
    return rep;
}

namespace ref {

double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    if (dx <= 0.0 || dy <= 0.0)
        return 0.0;
    return num / std::sqrt(dx * dy);
}

std::vector<std::vector<double>> cima_matrix(const TraceSet& ts) {
    std::vector<std::vector<double>> out(256);
    std::vector<double> h(ts.n_traces), col(ts.n_traces);
    for (int k = 0; k < 256; ++k) {
        out[k].resize(ts.n_points);
        for (std::size_t i = 0; i < ts.n_traces; ++i)
            h[i] = double(hamming_weight(first_round_intermediate(ts.plaintexts[i], uint8_t(k))));
        for (std::size_t f = 0; f < ts.n_points; ++f) {
            for (std::size_t i = 0; i < ts.n_traces; ++i)
                col[i] = ts.traces[i * ts.n_points + f];
            out[k][f] = pearson(h, col);
        }
    }
    return out;
}

std::vector<std::vector<double>> dima_matrix(const TraceSet& ts, int* degenerate) {
    std::vector<std::vector<double>> out(256);
    for (int k = 0; k < 256; ++k) {
        out[k].assign(ts.n_points, 0.0);
        for (int b = 0; b < 8; ++b) {
            std::vector<double> s0(ts.n_points, 0.0), s1(ts.n_points, 0.0);
            std::size_t n0 = 0, n1 = 0;
            for (std::size_t i = 0; i < ts.n_traces; ++i) {
                bool one = (first_round_intermediate(ts.plaintexts[i], uint8_t(k)) >> b) & 1;
                auto& s = one ? s1 : s0;
                (one ? n1 : n0)++;
                for (std::size_t f = 0; f < ts.n_points; ++f)
                    s[f] += ts.traces[i * ts.n_points + f];
            }
            if (n0 == 0 || n1 == 0) {
                if (degenerate)
                    ++*degenerate;
                continue;
            }
            for (std::size_t f = 0; f < ts.n_points; ++f)
                out[k][f] += std::abs(s1[f] / double(n1) - s0[f] / double(n0));
        }
        for (std::size_t f = 0; f < ts.n_points; ++f)
            out[k][f] /= 8.0;
    }
    return out;
}

} // namespace ref

} // namespace rohm
