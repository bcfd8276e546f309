#include "ulamsteer/ulam.hpp"

#include "ulamsteer/error.hpp"
#include "ulamsteer/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>

namespace ulamsteer {

double TransitionTensor::row_sum(std::size_t k, std::size_t i) const {
    double s = 0.0;
    for (SparseRowMatrix::InnerIterator it(P[k], static_cast<Eigen::Index>(i)); it; ++it)
        s += it.value();
    return s;
}

std::size_t TransitionTensor::nonzeros() const {
    std::size_t n = 0;
    for (const auto& m : P) n += static_cast<std::size_t>(m.nonZeros());
    return n;
}

bool TransitionTensor::operator==(const TransitionTensor& o) const {
    if (n_cells != o.n_cells || n_controls != o.n_controls || quadrature != o.quadrature ||
        partition_hash != o.partition_hash || controls_hash != o.controls_hash ||
        P.size() != o.P.size())
        return false;
    for (std::size_t k = 0; k < P.size(); ++k) {
        const auto& a = P[k];
        const auto& b = o.P[k];
        if (a.nonZeros() != b.nonZeros()) return false;
        for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
            SparseRowMatrix::InnerIterator ia(a, r), ib(b, r);
            for (; ia && ib; ++ia, ++ib)
                if (ia.col() != ib.col() || std::bit_cast<std::uint64_t>(ia.value()) !=
                                                std::bit_cast<std::uint64_t>(ib.value()))
                    return false;
            if (ia || ib) return false;
        }
    }
    return true;
}

namespace {

// Distance from y to the nearest face of the box, per-axis minimum.
double face_distance(std::span<const double> y, const Box& b) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < y.size(); ++a)
        d = std::min({d, y[a] - b.lower[a], b.upper[a] - y[a]});
    return d;
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
}

} // namespace

TransitionTensor build_tensor(const SystemMap& system, const Partition& partition,
                              const ControlGrid& controls, std::size_t q, std::size_t threads,
                              TensorDiagnostics* diagnostics) {
    if (q < 1) throw InvalidArgument("quadrature order must be >= 1");
    if (system.state_dim() != partition.dim())
        throw InvalidArgument("system and partition differ in state dimension");
    if (system.control_dim() != controls.dim())
        throw InvalidArgument("system and control grid differ in control dimension");

    const std::size_t n_x = partition.size();
    const std::size_t n_u = controls.size();
    const std::size_t dim = partition.dim();
    std::size_t points_per_cell = 1;
    for (std::size_t d = 0; d < dim; ++d) points_per_cell *= q;

    // hits[i][k] lists (target cell, count) sorted by target cell.
    using Hits = std::vector<std::pair<std::size_t, std::size_t>>;
    std::vector<std::vector<Hits>> hits(n_x, std::vector<Hits>(n_u));
    std::vector<double> near_counts(diagnostics ? n_x * n_u : 0, 0.0);

    parallel_for(n_x, threads, [&](std::size_t i) {
        const auto pts = partition.quadrature_points(i, q);
        // images[s][k]
        std::vector<std::vector<State>> images(pts.size());
        for (std::size_t s = 0; s < pts.size(); ++s) system.step_all(pts[s], controls, images[s]);

        for (std::size_t k = 0; k < n_u; ++k) {
            std::map<std::size_t, std::size_t> counts;
            std::size_t near = 0;
            for (std::size_t s = 0; s < pts.size(); ++s) {
                const State& y = images[s][k];
                const auto j = partition.try_locate(y);
                if (!j)
                    throw OutOfDomain("image of a quadrature point left the domain; "
                                      "enable clamping for system '" +
                                      std::string(system.name()) + "'");
                ++counts[*j];
                if (diagnostics) {
                    double spacing = 0.0;
                    std::size_t stride = 1;
                    for (std::size_t d = 0; d < dim; ++d) {
                        const std::size_t coord = (s / stride) % q;
                        if (coord > 0)
                            spacing = std::max(spacing, distance(y, images[s - stride][k]));
                        if (coord + 1 < q)
                            spacing = std::max(spacing, distance(y, images[s + stride][k]));
                        stride *= q;
                    }
                    if (face_distance(y, partition.cell_box(*j)) <= spacing) ++near;
                }
            }
            hits[i][k].assign(counts.begin(), counts.end());
            if (diagnostics)
                near_counts[k * n_x + i] =
                    static_cast<double>(near) / static_cast<double>(points_per_cell);
        }
    });

    TransitionTensor t;
    t.n_cells = n_x;
    t.n_controls = n_u;
    t.quadrature = q;
    t.partition_hash = partition.hash();
    t.controls_hash = controls.hash();
    t.P.resize(n_u);
    const double inv = 1.0 / static_cast<double>(points_per_cell);
    for (std::size_t k = 0; k < n_u; ++k) {
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t i = 0; i < n_x; ++i)
            for (const auto& [j, c] : hits[i][k])
                trip.emplace_back(static_cast<int>(i), static_cast<int>(j),
                                  static_cast<double>(c) * inv);
        SparseRowMatrix m(static_cast<Eigen::Index>(n_x), static_cast<Eigen::Index>(n_x));
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        t.P[k] = std::move(m);
    }
    if (diagnostics) {
        diagnostics->row_boundary_fraction = std::move(near_counts);
        double s = 0.0;
        for (double v : diagnostics->row_boundary_fraction) s += v;
        diagnostics->boundary_fraction =
            s / static_cast<double>(std::max<std::size_t>(1, n_x * n_u));
    }
    return t;
}

StageCost stage_cost_by_name(const std::string& name) {
    auto sq = [](std::span<const double> v) {
        double s = 0.0;
        for (double a : v) s += a * a;
        return s;
    };
    if (name == "quadratic")
        return [sq](std::span<const double> x, std::span<const double> u) { return sq(x) + sq(u); };
    if (name == "zero") return [](std::span<const double>, std::span<const double>) { return 0.0; };
    if (name == "state")
        return [sq](std::span<const double> x, std::span<const double>) { return sq(x); };
    if (name == "control")
        return [sq](std::span<const double>, std::span<const double> u) { return sq(u); };
    throw ConfigError("unknown cost function '" + name + "'");
}

CostTable build_cost_table(const Partition& partition, const ControlGrid& controls,
                           const StageCost& cost, std::size_t q, bool per_volume) {
    if (q < 1) throw InvalidArgument("quadrature order must be >= 1");
    CostTable table;
    table.values.resize(static_cast<Eigen::Index>(partition.size()),
                        static_cast<Eigen::Index>(controls.size()));
    const double scale = per_volume ? 1.0 : partition.cell_volume();
    for (std::size_t i = 0; i < partition.size(); ++i) {
        const auto pts = partition.quadrature_points(i, q);
        for (std::size_t k = 0; k < controls.size(); ++k) {
            double s = 0.0;
            for (const auto& x : pts) s += cost(x, controls[k]);
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                scale * s / static_cast<double>(pts.size());
        }
    }
    return table;
}

namespace {

constexpr char kMagic[8] = {'U', 'L', 'A', 'M', 'T', 'N', 'S', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated tensor file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace

void write_tensor_binary(const TransitionTensor& t, std::ostream& out) {
    out.write(kMagic, sizeof kMagic);
    put_u64(out, t.n_cells);
    put_u64(out, t.n_controls);
    put_u64(out, t.quadrature);
    put_u64(out, t.partition_hash);
    put_u64(out, t.controls_hash);
    for (const auto& m : t.P) {
        put_u64(out, static_cast<std::uint64_t>(m.nonZeros()));
        for (Eigen::Index r = 0; r < m.outerSize(); ++r)
            for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) {
                put_u64(out, static_cast<std::uint64_t>(r));
                put_u64(out, static_cast<std::uint64_t>(it.col()));
                put_u64(out, std::bit_cast<std::uint64_t>(it.value()));
            }
    }
    if (!out) throw FormatError("failed writing tensor file");
}

TransitionTensor read_tensor_binary(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("not a tensor file (bad magic)");
    TransitionTensor t;
    t.n_cells = get_u64(in);
    t.n_controls = get_u64(in);
    t.quadrature = get_u64(in);
    t.partition_hash = get_u64(in);
    t.controls_hash = get_u64(in);
    t.P.resize(t.n_controls);
    for (auto& m : t.P) {
        const std::uint64_t nnz = get_u64(in);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(nnz);
        for (std::uint64_t e = 0; e < nnz; ++e) {
            const auto i = get_u64(in);
            const auto j = get_u64(in);
            const double p = std::bit_cast<double>(get_u64(in));
            if (i >= t.n_cells || j >= t.n_cells) throw FormatError("tensor index out of range");
            trip.emplace_back(static_cast<int>(i), static_cast<int>(j), p);
        }
        m.resize(static_cast<Eigen::Index>(t.n_cells), static_cast<Eigen::Index>(t.n_cells));
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
    }
    return t;
}

void write_tensor_binary(const TransitionTensor& tensor, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_tensor_binary(tensor, out);
}

TransitionTensor read_tensor_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return read_tensor_binary(in);
}

void write_tensor_text(const TransitionTensor& t, std::ostream& out) {
    out << "# n_x " << t.n_cells << " n_u " << t.n_controls << " q " << t.quadrature
        << " partition_hash " << t.partition_hash << " controls_hash " << t.controls_hash << "\n";
    out << "# k i j p\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < t.P.size(); ++k)
        for (Eigen::Index r = 0; r < t.P[k].outerSize(); ++r)
            for (SparseRowMatrix::InnerIterator it(t.P[k], r); it; ++it)
                out << k << ' ' << r << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace ulamsteer
