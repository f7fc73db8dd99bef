#include "parastab/grid.hpp"
#include "parastab/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace parastab {

std::size_t Lattice::index_of(double x) const {
    double j = (x - center) / spacing() + static_cast<double>(count) / 2.0;
    long idx = std::lround(j);
    if (idx < 0) idx = 0;
    if (idx >= static_cast<long>(count)) idx = static_cast<long>(count) - 1;
    return static_cast<std::size_t>(idx);
}

std::vector<double> Lattice::points() const {
    std::vector<double> xs(count);
    for (std::size_t j = 0; j < count; ++j) xs[j] = point(j);
    return xs;
}

double interp_cubic(const Lattice& lat, const std::vector<double>& v, double x) {
    const double h = lat.spacing();
    double s = (x - lat.point(0)) / h;
    long i1 = static_cast<long>(std::floor(s));
    long n = static_cast<long>(lat.count);
    if (i1 < 1) i1 = 1;
    if (i1 > n - 3) i1 = n - 3;
    double u = s - static_cast<double>(i1);
    const double f0 = v[i1 - 1], f1 = v[i1], f2 = v[i1 + 1], f3 = v[i1 + 2];
    // 4-point Lagrange weights in the local variable u in [0,1].
    double w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    double w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    double w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    double w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3;
}

double DensityGrid::value_at(double x) const {
    return interp_cubic(lattice, values, x);
}

double DensityGrid::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

void DensityGrid::write_csv(const std::string& path, const std::string& config_hash) const {
    std::string tmp = path + ".tmp";
    FILE* f = std::fopen(tmp.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + tmp);
    std::fprintf(f, "# config_hash=%s\n", config_hash.c_str());
    std::fprintf(f, "t,T,y,x,value\n");
    for (std::size_t j = 0; j < values.size(); ++j) {
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t, T, y, lattice.point(j), values[j]);
    }
    std::fclose(f);
    std::filesystem::rename(tmp, path);
}

}  // namespace parastab
