#include "mspl/mds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"

namespace mspl::metrics {

namespace {

std::vector<double> multiply(const Matrix& b, const std::vector<double>& v) {
    std::vector<double> out(b.rows, 0.0);
    for (std::size_t i = 0; i < b.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < b.cols; ++j) acc += b(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

Matrix classical_mds(const Matrix& dissimilarity, MdsOptions options) {
    const std::size_t n = dissimilarity.rows;
    if (dissimilarity.cols != n) throw DataError("classical_mds: matrix is not square");
    Matrix coords(n, options.dims);
    if (n == 0) return coords;

    // B = -1/2 J D^2 J
    Matrix b(n, n);
    std::vector<double> row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double sq = dissimilarity(i, j) * dissimilarity(i, j);
            b(i, j) = sq;
            row_mean[i] += sq / static_cast<double>(n);
        }
    for (double r : row_mean) grand += r / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b(i, j) = -0.5 * (b(i, j) - row_mean[i] - row_mean[j] + grand);

    for (std::size_t axis = 0; axis < options.dims; ++axis) {
        // Shift by a Gershgorin bound so the iteration targets the largest
        // algebraic eigenvalue rather than the largest magnitude.
        double shift = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < n; ++j) r += std::abs(b(i, j));
            shift = std::max(shift, r);
        }

        // Seeded random start; a fixed ramp can be exactly orthogonal to an
        // eigenvector of symmetric layouts.
        std::mt19937_64 rng(0x6d6473u + axis);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> v(n);
        for (auto& x : v) x = u(rng);
        double nv = norm(v);
        for (double& x : v) x /= nv;

        double lambda = 0.0;
        for (std::size_t it = 0; it < options.max_iterations; ++it) {
            auto w = multiply(b, v);
            for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
            const double nw = norm(w);
            if (nw == 0.0) {
                lambda = 0.0;
                break;
            }
            for (double& x : w) x /= nw;
            double diff = 0.0;
            for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
            v = std::move(w);
            if (diff < options.tolerance) break;
        }
        const auto bv = multiply(b, v);
        lambda = 0.0;
        for (std::size_t i = 0; i < n; ++i) lambda += v[i] * bv[i];

        std::size_t big = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[big])) big = i;
        if (v[big] < 0.0)
            for (double& x : v) x = -x;

        if (lambda > 0.0) {
            const double s = std::sqrt(lambda);
            for (std::size_t i = 0; i < n; ++i) coords(i, axis) = v[i] * s;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) -= lambda * v[i] * v[j];
    }
    return coords;
}

void write_mds_csv(std::span<const std::string> ids, const Matrix& coords, const std::filesystem::path& path) {
    if (ids.size() != coords.rows) throw UsageError("mds: id count does not match coordinates");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id,x,y\n";
    for (std::size_t i = 0; i < coords.rows; ++i)
        out << ids[i] << ',' << csv::format_double(coords(i, 0)) << ','
            << csv::format_double(coords.cols > 1 ? coords(i, 1) : 0.0) << '\n';
}

}  // namespace mspl::metrics
