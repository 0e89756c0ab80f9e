#include "mspl/synth_ts.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"

namespace mspl::synth {

std::size_t SynthConfig::series_length() const {
    return static_cast<std::size_t>(std::llround(duration * static_cast<double>(sample_rate)));
}

void SynthConfig::validate() const {
    if (m < 1 || n < 1) throw UsageError("Synth-TS needs m >= 1 and n >= 1");
    if (!(sigma_f > 0.0) || !(sigma_k > 0.0)) throw UsageError("Synth-TS standard deviations must be positive");
    if (!(sigma_n >= 0.0)) throw UsageError("Synth-TS noise level must be nonnegative");
    if (!(duration > 0.0) || sample_rate == 0) throw UsageError("Synth-TS duration and sample rate must be positive");
}

GridMeans grid_means(const SynthConfig& c) {
    GridMeans g;
    const double m = static_cast<double>(c.m);
    for (std::size_t i = 0; i < c.m; ++i) {
        const double step = static_cast<double>(i);
        g.mu_f.push_back(c.mu0 + 2.0 * step * std::numbers::sqrt2 * c.sigma_f);
        g.mu_k.push_back((-m + 2.0 * step) * std::numbers::sqrt2 * c.sigma_k);
    }
    return g;
}

std::pair<double, double> sample_parameters(const SynthConfig& c, int gaussian_id, std::mt19937_64& rng) {
    if (gaussian_id < 0 || static_cast<std::size_t>(gaussian_id) >= c.m * c.m)
        throw UsageError("gaussian id " + std::to_string(gaussian_id) + " outside the " + std::to_string(c.m) + "x" +
                         std::to_string(c.m) + " grid");
    const auto g = grid_means(c);
    const std::size_t i = static_cast<std::size_t>(gaussian_id) / c.m;
    const std::size_t j = static_cast<std::size_t>(gaussian_id) % c.m;
    std::normal_distribution<double> df(g.mu_f[i], c.sigma_f);
    std::normal_distribution<double> dk(g.mu_k[j], c.sigma_k);
    const double f = df(rng);
    const double k = dk(rng);
    return {f, k};
}

std::vector<double> time_grid(const SynthConfig& c) {
    const std::size_t len = c.series_length();
    std::vector<double> t(len);
    for (std::size_t i = 0; i < len; ++i) t[i] = static_cast<double>(i) / static_cast<double>(c.sample_rate);
    return t;
}

double seasonal(WaveType type, double f, double t, const SynthConfig& c) {
    const double b = c.offset;
    if (type == WaveType::sine) return std::abs(std::sin(std::numbers::pi * f * t)) + b;
    const double tf = t * f;
    const double x = tf - std::floor(tf);
    if (c.triangle == TriangleFormula::verbatim) return x < 0.5 ? 4.0 * f * x - 1.0 + b : -4.0 * f * x + 2.0 + b;
    return x < 0.5 ? 4.0 * x - 1.0 + b : -4.0 * x + 3.0 + b;
}

double trend(double k, double t, double t_max) { return k >= 0.0 ? k * t : k * (t - t_max); }

std::vector<double> synthesize_series(WaveType type, double f, double k, const SynthConfig& c, std::mt19937_64& rng) {
    const auto t = time_grid(c);
    const double t_max = t.back();
    std::normal_distribution<double> noise(0.0, c.sigma_n > 0.0 ? c.sigma_n : 1.0);
    std::vector<double> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        s[i] = seasonal(type, f, t[i], c) + trend(k, t[i], t_max);
        if (c.sigma_n > 0.0) s[i] += noise(rng);
    }
    return s;
}

SynthDataset build_dataset(const SynthConfig& c) {
    c.validate();
    SynthDataset out;
    const std::size_t cells = c.m * c.m;
    const std::size_t total = 2 * c.n * cells;
    const std::size_t len = c.series_length();
    out.samples.reserve(total);

    Dataset& d = out.dataset;
    d.kind = DatasetKind::synth;
    d.label_names = {"sine", "triangle"};
    d.features = Matrix(total, len);
    d.gt_clusters.emplace();

    std::size_t index = 0;
    for (std::size_t g = 0; g < cells; ++g)
        for (WaveType type : {WaveType::sine, WaveType::triangle})
            for (std::size_t r = 0; r < c.n; ++r, ++index) {
                std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                                  static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
                std::mt19937_64 rng(seq);
                SynthSample s;
                s.wave_type = type;
                s.gaussian_id = static_cast<int>(g);
                std::tie(s.f, s.k) = sample_parameters(c, s.gaussian_id, rng);
                s.series = synthesize_series(type, s.f, s.k, c, rng);
                std::copy(s.series.begin(), s.series.end(), d.features.row(index).begin());
                d.ids.push_back(std::to_string(index));
                d.labels.push_back(static_cast<int>(type));
                d.gt_clusters->push_back(s.gaussian_id);
                out.samples.push_back(std::move(s));
            }

    d.dissimilarity.ids = d.ids;
    d.dissimilarity.values = Matrix(total, total);
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i + 1; j < total; ++j) {
            const double v = std::hypot(out.samples[i].f - out.samples[j].f, out.samples[i].k - out.samples[j].k);
            d.dissimilarity.values(i, j) = d.dissimilarity.values(j, i) = v;
        }
    return out;
}

void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& d = data.dataset;
    {
        std::ofstream out(dir / "samples.csv");
        if (!out) throw DataError("cannot write " + (dir / "samples.csv").string());
        out << "id,wave_type,f,k,gaussian_id";
        for (std::size_t j = 0; j < d.features.cols; ++j) out << ",s" << j;
        out << '\n';
        for (std::size_t i = 0; i < data.samples.size(); ++i) {
            const auto& s = data.samples[i];
            out << d.ids[i] << ',' << (s.wave_type == WaveType::sine ? "sine" : "triangle") << ','
                << csv::format_double(s.f) << ',' << csv::format_double(s.k) << ',' << s.gaussian_id;
            for (double v : s.series) out << ',' << csv::format_double(v);
            out << '\n';
        }
    }
    write_dissimilarity_csv(d.dissimilarity, dir / "dissim.csv");
    write_clusters_csv(d.ids, *d.gt_clusters, dir / "gt_clusters.csv");
}

Dataset load_synth_dataset(const std::filesystem::path& dir) {
    const auto path = dir / "samples.csv";
    const auto table = csv::read(path);
    const std::string src = path.string();
    const std::size_t first_series = table.column("gaussian_id") + 1;
    const std::size_t id_col = table.column("id"), wave_col = table.column("wave_type");
    const std::size_t len = table.header.size() - first_series;

    Dataset d;
    d.kind = DatasetKind::synth;
    d.label_names = {"sine", "triangle"};
    d.features = Matrix(table.rows.size(), len);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        d.ids.push_back(row.fields[id_col]);
        const auto& w = row.fields[wave_col];
        if (w == "sine")
            d.labels.push_back(0);
        else if (w == "triangle")
            d.labels.push_back(1);
        else
            throw DataError(src + ":" + std::to_string(row.line) + ": unknown wave type '" + w + "'");
        for (std::size_t j = 0; j < len; ++j) d.features(i, j) = csv::parse_double(row.fields[first_series + j], src, row.line);
    }
    d.dissimilarity = read_dissimilarity_csv(dir / "dissim.csv");
    if (d.dissimilarity.ids != d.ids) throw DataError((dir / "dissim.csv").string() + ": ids do not match samples.csv");
    d.gt_clusters = read_clusters_csv(dir / "gt_clusters.csv", d.ids);
    d.validate();
    return d;
}

}  // namespace mspl::synth
