#include "kpo/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "kpo/io.hpp"

namespace kpo {

namespace {

// Stage kernel computing y = -i (A + p B - c I) x.
//
// Every Hamiltonian this project builds is real symmetric in the number
// basis, so the fast path stores the diagonal plus the strict upper
// triangle only (static entries first, pump entries second per row) and
// scatter-adds the mirrored term. That halves the streamed bytes per RK4
// stage, which is what bounds throughput at benchmark dimensions. Operators
// with complex or non-Hermitian entries fall back to a generic merged CSR.
struct PairedCsr {
    Eigen::Index dim = 0;
    bool real_symmetric = true;

    // real-symmetric path
    std::vector<double> diag_a, diag_b;
    std::vector<std::int64_t> rowptr;      // strict upper triangle
    std::vector<std::int64_t> pump_start;  // first pump entry within each row
    std::vector<std::int32_t> cols;
    std::vector<double> vals;

    // generic path (merged pattern, two complex value arrays)
    std::vector<std::int64_t> g_rowptr;
    std::vector<std::int32_t> g_cols;
    std::vector<Complex> a_cvals, b_cvals;

    void apply_schrodinger(const Complex* x, Complex* y, double p, double c) const {
        if (real_symmetric) {
            for (Eigen::Index r = 0; r < dim; ++r)
                y[r] = (diag_a[static_cast<std::size_t>(r)] +
                        p * diag_b[static_cast<std::size_t>(r)] - c) *
                       x[r];
            for (Eigen::Index r = 0; r < dim; ++r) {
                const std::size_t row = static_cast<std::size_t>(r);
                double acc_re = 0.0, acc_im = 0.0;
                const double xr_re = x[r].real(), xr_im = x[r].imag();
                const std::int64_t split = pump_start[row];
                const std::int64_t end = rowptr[row + 1];
                for (std::int64_t k = rowptr[row]; k < split; ++k) {
                    const double v = vals[static_cast<std::size_t>(k)];
                    const std::int32_t col = cols[static_cast<std::size_t>(k)];
                    const Complex xc = x[col];
                    acc_re += v * xc.real();
                    acc_im += v * xc.imag();
                    y[col] += Complex(v * xr_re, v * xr_im);
                }
                for (std::int64_t k = split; k < end; ++k) {
                    const double v = p * vals[static_cast<std::size_t>(k)];
                    const std::int32_t col = cols[static_cast<std::size_t>(k)];
                    const Complex xc = x[col];
                    acc_re += v * xc.real();
                    acc_im += v * xc.imag();
                    y[col] += Complex(v * xr_re, v * xr_im);
                }
                y[r] += Complex(acc_re, acc_im);
            }
            for (Eigen::Index r = 0; r < dim; ++r)
                y[r] = Complex(y[r].imag(), -y[r].real());  // multiply by -i
        } else {
            for (Eigen::Index r = 0; r < dim; ++r) {
                Complex acc(0.0, 0.0);
                const std::int64_t end = g_rowptr[static_cast<std::size_t>(r) + 1];
                for (std::int64_t k = g_rowptr[static_cast<std::size_t>(r)]; k < end; ++k) {
                    const Complex coef = a_cvals[static_cast<std::size_t>(k)] +
                                         p * b_cvals[static_cast<std::size_t>(k)];
                    acc += coef * x[g_cols[static_cast<std::size_t>(k)]];
                }
                acc -= c * x[r];
                y[r] = Complex(acc.imag(), -acc.real());
            }
        }
    }

    // Re <x| (A + p B) |x>
    double energy_expectation(const Complex* x, double p) const {
        double e = 0.0;
        if (real_symmetric) {
            for (Eigen::Index r = 0; r < dim; ++r) {
                const std::size_t row = static_cast<std::size_t>(r);
                e += (diag_a[row] + p * diag_b[row]) * std::norm(x[r]);
                const std::int64_t split = pump_start[row];
                const std::int64_t end = rowptr[row + 1];
                for (std::int64_t k = rowptr[row]; k < end; ++k) {
                    const double v =
                        k < split ? vals[static_cast<std::size_t>(k)]
                                  : p * vals[static_cast<std::size_t>(k)];
                    const Complex xc = x[cols[static_cast<std::size_t>(k)]];
                    e += 2.0 * v * (x[r].real() * xc.real() + x[r].imag() * xc.imag());
                }
            }
        } else {
            for (Eigen::Index r = 0; r < dim; ++r) {
                Complex acc(0.0, 0.0);
                const std::int64_t end = g_rowptr[static_cast<std::size_t>(r) + 1];
                for (std::int64_t k = g_rowptr[static_cast<std::size_t>(r)]; k < end; ++k)
                    acc += (a_cvals[static_cast<std::size_t>(k)] +
                            p * b_cvals[static_cast<std::size_t>(k)]) *
                           x[g_cols[static_cast<std::size_t>(k)]];
                e += (std::conj(x[r]) * acc).real();
            }
        }
        return e;
    }
};

double max_abs_entry(const SparseCx& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseCx::InnerIterator it(m, k); it; ++it)
            v = std::max(v, std::abs(it.value()));
    return v;
}

double max_abs_imag(const SparseCx& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseCx::InnerIterator it(m, k); it; ++it)
            v = std::max(v, std::abs(it.value().imag()));
    return v;
}

PairedCsr build_paired_csr(const FockOperator& h_static, const FockOperator& h_pump,
                           const ParitySector* sector) {
    if (h_static.dim() != h_pump.dim())
        throw DimensionError("static and pump operators have different dimensions");

    const SparseCx& a = h_static.matrix();
    const SparseCx& b = h_pump.matrix();

    PairedCsr csr;
    const double scale = std::max(max_abs_entry(a), max_abs_entry(b));
    csr.real_symmetric =
        std::max(max_abs_imag(a), max_abs_imag(b)) <= 1e-14 * std::max(scale, 1.0) &&
        h_static.hermiticity_error() <= 1e-12 && h_pump.hermiticity_error() <= 1e-12;

    const Eigen::Index full_dim = a.rows();
    csr.dim = sector ? sector->dim() : full_dim;

    auto map_col = [&](Eigen::Index col) -> std::int32_t {
        if (!sector) return static_cast<std::int32_t>(col);
        const std::int32_t mapped = sector->full_to_sector[static_cast<std::size_t>(col)];
        if (mapped < 0) throw UsageError("operator entry leaves the even-parity sector");
        return mapped;
    };
    auto full_row_of = [&](Eigen::Index r) {
        return sector ? static_cast<Eigen::Index>(
                            sector->sector_to_full[static_cast<std::size_t>(r)])
                      : r;
    };

    if (csr.real_symmetric) {
        csr.diag_a.assign(static_cast<std::size_t>(csr.dim), 0.0);
        csr.diag_b.assign(static_cast<std::size_t>(csr.dim), 0.0);
        csr.rowptr.reserve(static_cast<std::size_t>(csr.dim) + 1);
        csr.rowptr.push_back(0);
        for (Eigen::Index r = 0; r < csr.dim; ++r) {
            const Eigen::Index full_row = full_row_of(r);
            for (SparseCx::InnerIterator it(a, static_cast<int>(full_row)); it; ++it) {
                if (it.col() == full_row)
                    csr.diag_a[static_cast<std::size_t>(r)] = it.value().real();
                else if (it.col() > full_row) {
                    csr.cols.push_back(map_col(it.col()));
                    csr.vals.push_back(it.value().real());
                }
            }
            csr.pump_start.push_back(static_cast<std::int64_t>(csr.cols.size()));
            for (SparseCx::InnerIterator it(b, static_cast<int>(full_row)); it; ++it) {
                if (it.col() == full_row)
                    csr.diag_b[static_cast<std::size_t>(r)] = it.value().real();
                else if (it.col() > full_row) {
                    csr.cols.push_back(map_col(it.col()));
                    csr.vals.push_back(it.value().real());
                }
            }
            csr.rowptr.push_back(static_cast<std::int64_t>(csr.cols.size()));
        }
        return csr;
    }

    csr.g_rowptr.reserve(static_cast<std::size_t>(csr.dim) + 1);
    csr.g_rowptr.push_back(0);
    for (Eigen::Index r = 0; r < csr.dim; ++r) {
        const Eigen::Index full_row = full_row_of(r);
        SparseCx::InnerIterator ia(a, static_cast<int>(full_row));
        SparseCx::InnerIterator ib(b, static_cast<int>(full_row));
        // Merge the two sorted column lists.
        while (ia || ib) {
            Complex av(0.0, 0.0), bv(0.0, 0.0);
            Eigen::Index col;
            if (ia && (!ib || ia.col() <= ib.col())) {
                col = ia.col();
                av = ia.value();
                if (ib && ib.col() == col) {
                    bv = ib.value();
                    ++ib;
                }
                ++ia;
            } else {
                col = ib.col();
                bv = ib.value();
                ++ib;
            }
            csr.g_cols.push_back(map_col(col));
            csr.a_cvals.push_back(av);
            csr.b_cvals.push_back(bv);
        }
        csr.g_rowptr.push_back(static_cast<std::int64_t>(csr.g_cols.size()));
    }
    return csr;
}

}  // namespace

Trajectory evolve(const StateVector& initial, const FockOperator& h_static,
                  const FockOperator& h_pump, const EvolutionConfig& config) {
    if (initial.dim() != h_static.dim())
        throw DimensionError("initial state does not match operator dimension");
    if (config.dt <= 0.0) throw ValidationError("dt must be positive");
    if (config.dt > config.schedule.duration)
        throw ValidationError("dt must not exceed the schedule duration");
    if (std::abs(initial.norm() - 1.0) > 1e-9)
        throw ValidationError("initial state must be normalized");
    for (double ts : config.snapshot_times)
        if (ts < 0.0 || ts > config.schedule.duration)
            throw ValidationError("snapshot times must lie within [0, duration]");

    const double duration = config.schedule.duration;
    const auto n_steps = static_cast<long long>(std::llround(duration / config.dt));
    // Fixed step; duration is expected to be an integer number of steps.
    const double dt = duration / static_cast<double>(n_steps);

    ParitySector sector;
    const ParitySector* sector_ptr = nullptr;
    if (config.use_even_parity_sector) {
        if (!h_static.preserves_parity() || !h_pump.preserves_parity())
            throw UsageError("operators do not preserve parity; cannot restrict");
        sector = even_parity_sector(h_static.n_modes(), h_static.truncation());
        for (std::size_t i = 0; i < sector.full_to_sector.size(); ++i)
            if (sector.full_to_sector[i] < 0 &&
                initial.amplitudes(static_cast<Eigen::Index>(i)) != Complex(0.0, 0.0))
                throw UsageError("initial state has weight outside the even-parity sector");
        sector_ptr = &sector;
    }

    const PairedCsr csr = build_paired_csr(h_static, h_pump, sector_ptr);
    const Eigen::Index dim = csr.dim;

    Eigen::VectorXcd psi(dim);
    if (sector_ptr) {
        for (Eigen::Index r = 0; r < dim; ++r)
            psi(r) = initial.amplitudes(sector.sector_to_full[static_cast<std::size_t>(r)]);
    } else {
        psi = initial.amplitudes;
    }

    std::vector<double> signs;
    if (!sector_ptr && config.monitor_parity)
        signs = parity_signs(h_static.n_modes(), h_static.truncation());

    auto embed = [&](const Eigen::VectorXcd& v, double /*t*/) {
        StateVector out;
        out.n_modes = h_static.n_modes();
        out.truncation = h_static.truncation();
        if (sector_ptr) {
            out.amplitudes = Eigen::VectorXcd::Zero(h_static.dim());
            for (Eigen::Index r = 0; r < dim; ++r)
                out.amplitudes(sector.sector_to_full[static_cast<std::size_t>(r)]) = v(r);
        } else {
            out.amplitudes = v;
        }
        return out;
    };

    // Map requested snapshot times onto their nearest step index.
    std::set<long long> snapshot_steps;
    for (double ts : config.snapshot_times)
        snapshot_steps.insert(std::clamp<long long>(
            static_cast<long long>(std::llround(ts / dt)), 0, n_steps));

    Trajectory traj;
    traj.used_parity_sector = sector_ptr != nullptr;

    double parity0 = 0.0;
    bool have_parity0 = false;
    double shift = csr.energy_expectation(psi.data(), config.schedule.pump_at(0.0));

    auto run_monitors = [&](long long step_index, double t) {
        const double p = config.schedule.pump_at(t);
        const double norm = psi.norm();
        if (config.monitor_norm || config.monitor_parity || config.monitor_energy)
            traj.monitors.t.push_back(t);
        if (config.monitor_norm) {
            traj.monitors.norm.push_back(norm);
            traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(norm - 1.0));
            if (std::abs(norm - 1.0) > config.norm_tolerance)
                throw IntegrationError(
                    "norm drift " + format_double(std::abs(norm - 1.0)) + " at t = " +
                    format_double(t) + " exceeds tolerance; use a smaller dt");
        }
        if (config.monitor_parity) {
            double par;
            if (sector_ptr) {
                par = psi.squaredNorm();
            } else {
                par = 0.0;
                for (Eigen::Index i = 0; i < dim; ++i)
                    par += signs[static_cast<std::size_t>(i)] * std::norm(psi(i));
            }
            traj.monitors.parity.push_back(par);
            if (!have_parity0) {
                parity0 = par;
                have_parity0 = true;
            }
            traj.max_parity_drift = std::max(traj.max_parity_drift, std::abs(par - parity0));
        }
        const double energy = csr.energy_expectation(psi.data(), p);
        if (config.monitor_energy) traj.monitors.energy.push_back(energy);
        // Refresh the frame shift from the same pass cadence.
        const double nn = norm * norm;
        if (nn > 0.0) shift = energy / nn;
        (void)step_index;
    };

    Eigen::VectorXcd k1(dim), k2(dim), k3(dim), k4(dim), buf(dim);

    for (long long step = 0; step <= n_steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        if (step % config.monitor_stride == 0 || step == n_steps) run_monitors(step, t);
        if (snapshot_steps.count(step)) traj.snapshots.emplace_back(t, embed(psi, t));
        if (step == n_steps) break;

        const double p1 = config.schedule.pump_at(t);
        const double p2 = config.schedule.pump_at(t + 0.5 * dt);
        const double p4 = config.schedule.pump_at(t + dt);
        const double c = shift;

        csr.apply_schrodinger(psi.data(), k1.data(), p1, c);
        buf = psi + (0.5 * dt) * k1;
        csr.apply_schrodinger(buf.data(), k2.data(), p2, c);
        buf = psi + (0.5 * dt) * k2;
        csr.apply_schrodinger(buf.data(), k3.data(), p2, c);
        buf = psi + dt * k3;
        csr.apply_schrodinger(buf.data(), k4.data(), p4, c);
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    traj.final_state = embed(psi, duration);
    return traj;
}

std::vector<GroundCheckRow> adiabatic_ground_check(const FockOperator& h_static,
                                                   const FockOperator& h_pump,
                                                   const std::vector<double>& p_samples,
                                                   int n_levels) {
    if (h_static.dim() != h_pump.dim())
        throw DimensionError("static and pump operators have different dimensions");
    if (h_static.dim() > 4096)
        throw CapacityError("dense spectrum scan limited to 2-mode scale dimensions");

    const Eigen::MatrixXcd a = h_static.dense();
    const Eigen::MatrixXcd b = h_pump.dense();
    const std::vector<double> signs =
        parity_signs(h_static.n_modes(), h_static.truncation());

    std::vector<Eigen::Index> even_idx;
    for (std::size_t i = 0; i < signs.size(); ++i)
        if (signs[i] > 0.0) even_idx.push_back(static_cast<Eigen::Index>(i));

    std::vector<GroundCheckRow> rows;
    rows.reserve(p_samples.size());
    for (double p : p_samples) {
        Eigen::MatrixXcd h = a + p * b;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);

        GroundCheckRow row;
        row.p = p;
        const int levels = std::min<int>(n_levels, static_cast<int>(h.rows()));
        row.lowest = solver.eigenvalues().head(levels);
        row.ground_energy = solver.eigenvalues()(0);

        Eigen::MatrixXcd h_even(even_idx.size(), even_idx.size());
        for (std::size_t i = 0; i < even_idx.size(); ++i)
            for (std::size_t k = 0; k < even_idx.size(); ++k)
                h_even(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    h(even_idx[i], even_idx[k]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> even_solver(h_even);
        row.even_gap = even_solver.eigenvalues()(1) - even_solver.eigenvalues()(0);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_monitor_csv(const Trajectory& traj, const std::filesystem::path& path) {
    CsvWriter csv(path, {"t", "norm", "parity", "energy"});
    const auto& m = traj.monitors;
    for (std::size_t i = 0; i < m.t.size(); ++i) {
        csv.write_row({format_double(m.t[i]),
                       i < m.norm.size() ? format_double(m.norm[i]) : std::string(),
                       i < m.parity.size() ? format_double(m.parity[i]) : std::string(),
                       i < m.energy.size() ? format_double(m.energy[i]) : std::string()});
    }
}

void write_snapshot_json(const StateVector& state, double time,
                         const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["time"] = time;
    doc["n_modes"] = state.n_modes;
    doc["truncation"] = state.truncation;
    nlohmann::json amps = nlohmann::json::array();
    for (Eigen::Index i = 0; i < state.dim(); ++i)
        amps.push_back({state.amplitudes(i).real(), state.amplitudes(i).imag()});
    doc["amplitudes"] = amps;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write snapshot " + path.string());
    out << doc.dump() << '\n';
}

}  // namespace kpo
