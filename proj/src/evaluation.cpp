#include "wcae/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "wcae/binary_io.hpp"

namespace wcae::eval {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* op) {
    if (a.size() != b.size()) {
        throw InvalidInput(std::string(op) + ": lengths differ (" + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw InvalidInput(std::string(op) + ": empty input");
}

double energy(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double error_energy(std::span<const double> clean, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) s += (x[i] - clean[i]) * (x[i] - clean[i]);
    return s;
}

}  // namespace

double rmse(std::span<const double> clean, std::span<const double> denoised) {
    check_lengths(clean, denoised, "rmse");
    return std::sqrt(error_energy(clean, denoised) / static_cast<double>(clean.size()));
}

double snr_db(std::span<const double> clean, std::span<const double> x) {
    check_lengths(clean, x, "snr_db");
    const double e = error_energy(clean, x);
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(energy(clean) / e);
}

double snr_improvement(std::span<const double> clean, std::span<const double> noisy,
                       std::span<const double> denoised) {
    check_lengths(clean, noisy, "snr_improvement");
    check_lengths(clean, denoised, "snr_improvement");
    const double e_in = error_energy(clean, noisy);
    if (e_in == 0.0) throw InvalidInput("snr_improvement: noisy input equals the clean signal");
    const double e_out = error_energy(clean, denoised);
    if (e_out == 0.0) return std::numeric_limits<double>::infinity();
    // The clean energy cancels in the difference of the two SNRs.
    return 10.0 * std::log10(e_in / e_out);
}

double prd(std::span<const double> clean, std::span<const double> denoised) {
    check_lengths(clean, denoised, "prd");
    const double ec = energy(clean);
    if (ec == 0.0) throw InvalidInput("prd: clean signal has zero energy");
    return 100.0 * std::sqrt(error_energy(clean, denoised) / ec);
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Rmse: return "rmse";
        case Metric::SnrImprovement: return "snr_improvement_db";
        case Metric::Prd: return "prd_percent";
    }
    return "?";
}

Metric parse_metric(const std::string& name) {
    for (Metric m : kMetrics)
        if (name == metric_name(m)) return m;
    throw InvalidInput("unknown metric '" + name + "'");
}

RunMetrics evaluate_denoiser(const Denoiser& denoise, const data::PairSet& test, const std::vector<double>& snr_set,
                             unsigned threads, std::size_t batch) {
    if (snr_set.empty()) throw InvalidInput("evaluate: empty SNR set");
    if (batch == 0) batch = 1;
    std::vector<std::vector<std::size_t>> groups;
    for (double s : snr_set) {
        auto idx = test.indices_at_snr(s);
        if (idx.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", s);
            throw InvalidInput(std::string("evaluate: no test windows at input SNR ") + buf + " dB");
        }
        groups.push_back(std::move(idx));
    }

    // Flatten into fixed batches so the result does not depend on scheduling.
    std::vector<std::size_t> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    const std::size_t n_batches = (all.size() + batch - 1) / batch;
    std::vector<std::vector<double>> denoised(test.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t b = next++; b < n_batches; b = next++) {
            try {
                const std::size_t lo = b * batch;
                const std::size_t hi = std::min(all.size(), lo + batch);
                const std::span<const std::size_t> idx(all.data() + lo, hi - lo);
                const Tensor3 y = denoise(test.noisy_batch(idx));
                if (y.shape() != Shape{idx.size(), test.width, 1}) {
                    throw InvalidInput("evaluate: denoiser returned shape " + y.shape().str());
                }
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    denoised[idx[i]].assign(y.item(i), y.item(i) + test.width);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n_batches;
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_batches)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    RunMetrics out;
    out.snr_db = snr_set;
    for (const auto& g : groups) {
        std::array<double, 3> sum{};
        for (std::size_t i : g) {
            const auto& p = test.pairs[i];
            sum[0] += rmse(p.clean, denoised[i]);
            sum[1] += snr_improvement(p.clean, p.noisy, denoised[i]);
            sum[2] += prd(p.clean, denoised[i]);
        }
        for (double& s : sum) s /= static_cast<double>(g.size());
        out.mean.push_back(sum);
        out.windows.push_back(g.size());
    }
    return out;
}

RunMetrics evaluate_model(const arch::Network& net, const data::PairSet& test, const std::vector<double>& snr_set,
                          unsigned threads) {
    return evaluate_denoiser([&net](const Tensor3& x) { return net.infer(x); }, test, snr_set, threads);
}

void MetricsReport::validate() const {
    for (const auto& r : rows) {
        if (r.cells.size() != snr_columns.size()) {
            throw InvalidInput("report row " + r.id + " has " + std::to_string(r.cells.size()) + " columns, expected " +
                               std::to_string(snr_columns.size()));
        }
        for (const auto& c : r.cells) {
            if (c[0].mean < 0.0 || c[2].mean < 0.0) throw InvalidInput("report row " + r.id + ": negative rmse or prd");
        }
    }
}

const ReportRow& MetricsReport::row(const std::string& id) const {
    for (const auto& r : rows)
        if (r.id == id) return r;
    throw InvalidInput("report has no row '" + id + "'");
}

ReportRow aggregate_runs(const std::string& id, const arch::ModelSpec& spec, const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw InvalidInput("aggregate_runs: no runs");
    ReportRow row;
    row.id = id;
    row.variant = spec.label();
    row.k = spec.effective_k();
    const std::size_t cols = runs[0].snr_db.size();
    for (const auto& r : runs) {
        if (r.snr_db != runs[0].snr_db) throw InvalidInput("aggregate_runs: runs use different SNR sets");
    }
    row.cells.resize(cols);
    const auto n = static_cast<double>(runs.size());
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t m = 0; m < 3; ++m) {
            double mean = 0.0;
            for (const auto& r : runs) mean += r.mean[c][m];
            mean /= n;
            double var = 0.0;
            for (const auto& r : runs) var += (r.mean[c][m] - mean) * (r.mean[c][m] - mean);
            row.cells[c][m] = {mean, runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0, runs.size()};
        }
    }
    return row;
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s, std::uint64_t offset) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("report csv: bad number '" + std::string(s) + "'", offset);
    }
    return v;
}

}  // namespace

std::string report_csv(const MetricsReport& report) {
    report.validate();
    std::string out = "id,variant,k,snr_db,metric,mean,std,n\n";
    for (const auto& r : report.rows) {
        if (r.id.find_first_of(",\n") != std::string::npos) throw InvalidInput("report id contains ',' or newline");
        for (std::size_t c = 0; c < report.snr_columns.size(); ++c) {
            for (Metric m : kMetrics) {
                const Cell& cell = r.cells[c][static_cast<std::size_t>(m)];
                out += r.id + ',' + r.variant + ',' + std::to_string(r.k) + ',' + num(report.snr_columns[c]) + ',' +
                       metric_name(m) + ',' + num(cell.mean) + ',' + num(cell.std) + ',' + std::to_string(cell.n) + '\n';
            }
        }
    }
    return out;
}

MetricsReport parse_report_csv(std::string_view text) {
    MetricsReport report;
    std::size_t pos = 0;
    bool header = true;
    struct Filled {
        std::vector<std::array<bool, 3>> seen;
    };
    std::vector<Filled> filled;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        const std::uint64_t offset = pos;
        pos = end + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "id,variant,k,snr_db,metric,mean,std,n") throw ParseError("report csv: unexpected header", offset);
            header = false;
            continue;
        }
        std::vector<std::string_view> f;
        std::size_t s = 0;
        while (true) {
            const auto comma = line.find(',', s);
            f.push_back(line.substr(s, comma == std::string_view::npos ? std::string_view::npos : comma - s));
            if (comma == std::string_view::npos) break;
            s = comma + 1;
        }
        if (f.size() != 8) throw ParseError("report csv: expected 8 fields", offset);
        const std::string id(f[0]);
        const double snr = parse_double(f[3], offset);
        auto col_it = std::find(report.snr_columns.begin(), report.snr_columns.end(), snr);
        std::size_t col = static_cast<std::size_t>(col_it - report.snr_columns.begin());
        if (col_it == report.snr_columns.end()) {
            if (!report.rows.empty() && report.rows.front().id != id) throw ParseError("report csv: SNR column appears after the first row", offset);
            report.snr_columns.push_back(snr);
        }
        auto row_it = std::find_if(report.rows.begin(), report.rows.end(), [&](const ReportRow& r) { return r.id == id; });
        if (row_it == report.rows.end()) {
            ReportRow r;
            r.id = id;
            r.variant = std::string(f[1]);
            r.k = static_cast<int>(parse_double(f[2], offset));
            report.rows.push_back(std::move(r));
            filled.emplace_back();
            row_it = report.rows.end() - 1;
        }
        const auto ri = static_cast<std::size_t>(row_it - report.rows.begin());
        if (row_it->cells.size() < report.snr_columns.size()) {
            row_it->cells.resize(report.snr_columns.size());
            filled[ri].seen.resize(report.snr_columns.size());
        }
        Metric m;
        try {
            m = parse_metric(std::string(f[4]));
        } catch (const InvalidInput&) {
            throw ParseError("report csv: unknown metric '" + std::string(f[4]) + "'", offset);
        }
        const auto mi = static_cast<std::size_t>(m);
        if (filled[ri].seen[col][mi]) throw ParseError("report csv: duplicate cell", offset);
        filled[ri].seen[col][mi] = true;
        row_it->cells[col][mi] = {parse_double(f[5], offset), parse_double(f[6], offset),
                                  static_cast<std::size_t>(parse_double(f[7], offset))};
    }
    if (header) throw ParseError("report csv: missing header", 0);
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        if (report.rows[r].cells.size() != report.snr_columns.size()) {
            throw ParseError("report csv: row " + report.rows[r].id + " is missing columns", text.size());
        }
        for (const auto& c : filled[r].seen)
            if (!(c[0] && c[1] && c[2])) throw ParseError("report csv: row " + report.rows[r].id + " is incomplete", text.size());
    }
    return report;
}

std::string report_table(const MetricsReport& report, Metric metric) {
    const int digits = metric == Metric::Rmse ? 4 : 2;
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> head{"ID", "Model"};
    for (double s : report.snr_columns) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g dB", s);
        head.push_back(buf);
    }
    cells.push_back(head);
    for (const auto& r : report.rows) {
        std::vector<std::string> line{r.id, r.variant};
        for (const auto& c : r.cells) {
            const Cell& cell = c[static_cast<std::size_t>(metric)];
            char buf[64];
            if (cell.n > 1) std::snprintf(buf, sizeof buf, "%.*f +- %.*f", digits, cell.mean, digits, cell.std);
            else std::snprintf(buf, sizeof buf, "%.*f", digits, cell.mean);
            line.push_back(buf);
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    std::ostringstream os;
    os << metric_name(metric) << '\n';
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i) os << "  ";
            os << std::string(width[i] - line[i].size(), ' ') << line[i];
        }
        os << '\n';
    }
    return os.str();
}

double DecompositionReport::energy_fraction(std::size_t band) const {
    const double total = energy(signal);
    if (total == 0.0) return 0.0;
    return energy(bands.at(band).reconstruction) / total;
}

DecompositionReport decomposition_report(std::span<const double> signal, double fs, int levels) {
    if (levels < 1) throw InvalidInput("decomposition_report: levels must be >= 1");
    const std::size_t block = std::size_t{1} << levels;
    if (signal.empty() || signal.size() % block != 0) {
        throw InvalidInput("decomposition_report: length " + std::to_string(signal.size()) + " is not divisible by 2^" +
                           std::to_string(levels));
    }
    const auto& bank = wavelet::db6();
    const auto dec = wavelet::wavedec(signal, levels, bank, fs);
    DecompositionReport rep;
    rep.sampling_rate_hz = fs;
    rep.levels = levels;
    rep.signal.assign(signal.begin(), signal.end());

    auto isolate = [&](int which) {
        // which = 1..L for details, 0 for the approximation.
        wavelet::WaveletDecomposition only = dec;
        for (int k = 1; k <= levels; ++k)
            if (k != which) std::fill(only.details[k - 1].begin(), only.details[k - 1].end(), 0.0);
        if (which != 0) std::fill(only.approx.begin(), only.approx.end(), 0.0);
        return wavelet::waverec(only, bank);
    };
    for (int k = 1; k <= levels; ++k) {
        rep.bands.push_back({"D" + std::to_string(k), dec.detail_band(k), dec.details[k - 1], isolate(k)});
    }
    rep.bands.push_back({"A", dec.approx_band(), dec.approx, isolate(0)});
    return rep;
}

std::string decomposition_svg(const DecompositionReport& rep) {
    const double w = 900.0, panel = 110.0, margin = 40.0;
    const std::size_t panels = rep.bands.size() + 1;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 * margin << "\" height=\""
       << panels * panel + margin << "\" font-family=\"monospace\" font-size=\"12\">\n";
    auto series = [&](const std::vector<double>& y, std::size_t slot, const std::string& label) {
        const double top = margin / 2 + slot * panel;
        const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
        const double span = *hi - *lo > 0 ? *hi - *lo : 1.0;
        os << "<text x=\"4\" y=\"" << top + 12 << "\">" << label << "</text>\n";
        os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double x = margin + w * static_cast<double>(i) / static_cast<double>(y.size() - 1 ? y.size() - 1 : 1);
            const double py = top + 16 + (panel - 24) * (1.0 - (y[i] - *lo) / span);
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, py);
            os << buf;
        }
        os << "\"/>\n";
    };
    series(rep.signal, 0, "input");
    for (std::size_t b = 0; b < rep.bands.size(); ++b) {
        const auto& band = rep.bands[b];
        char label[96];
        std::snprintf(label, sizeof label, "%s %.4g-%.4g Hz", band.name.c_str(), band.band.low_hz, band.band.high_hz);
        series(band.reconstruction, b + 1, label);
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<std::string> write_decomposition(const DecompositionReport& rep, const std::string& dir, bool with_svg) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> paths;
    for (const auto& band : rep.bands) {
        std::string body;
        char buf[128];
        std::snprintf(buf, sizeof buf, "# band=%s low_hz=%.17g high_hz=%.17g fs=%.17g\nsample,time_s,reconstruction\n",
                      band.name.c_str(), band.band.low_hz, band.band.high_hz, rep.sampling_rate_hz);
        body += buf;
        for (std::size_t i = 0; i < band.reconstruction.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, static_cast<double>(i) / rep.sampling_rate_hz,
                          band.reconstruction[i]);
            body += buf;
        }
        const auto path = (fs::path(dir) / ("band_" + band.name + ".csv")).string();
        write_file(path, body);
        paths.push_back(path);
    }
    std::string coeffs = "band,index,value\n";
    for (const auto& band : rep.bands) {
        for (std::size_t i = 0; i < band.coefficients.size(); ++i) {
            coeffs += band.name + ',' + std::to_string(i) + ',' + num(band.coefficients[i]) + '\n';
        }
    }
    const auto cpath = (fs::path(dir) / "coefficients.csv").string();
    write_file(cpath, coeffs);
    paths.push_back(cpath);
    if (with_svg) {
        const auto spath = (fs::path(dir) / "decomposition.svg").string();
        write_file(spath, decomposition_svg(rep));
        paths.push_back(spath);
    }
    return paths;
}

}  // namespace wcae::eval
