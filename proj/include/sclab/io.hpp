#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "grid.hpp"

namespace sclab {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; byte swapping not implemented");

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw error("field file truncated");
    return v;
}

inline void write_grid_header(std::ostream& os, const Grid& g) {
    put<std::uint32_t>(os, std::uint32_t(g.d));
    for (int ax = 0; ax < g.d; ++ax) put<std::uint32_t>(os, std::uint32_t(g.m[ax]));
    for (int ax = 0; ax < g.d; ++ax) {
        put<double>(os, g.lo[ax]);
        put<double>(os, g.hi[ax]);
    }
}

inline Grid read_grid_header(std::istream& is) {
    Grid g;
    g.d = int(get<std::uint32_t>(is));
    if (g.d != 1 && g.d != 2) throw error("field file: bad dimension");
    for (int ax = 0; ax < g.d; ++ax) g.m[ax] = get<std::uint32_t>(is);
    if (g.d == 1) g.m[1] = 1;
    for (int ax = 0; ax < g.d; ++ax) {
        g.lo[ax] = get<double>(is);
        g.hi[ax] = get<double>(is);
    }
    return g;
}

}  // namespace detail

inline void write_field_binary(const std::string& path, const ScalarField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("cannot open '" + path + "' for writing");
    os.write("SCLBFLD1", 8);
    detail::write_grid_header(os, f.grid);
    os.write(reinterpret_cast<const char*>(f.a.data()),
             std::streamsize(f.a.size() * sizeof(double)));
    if (!os) throw error("write failed: '" + path + "'");
}

inline ScalarField read_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "SCLBFLD1") throw error("not a field file: " + path);
    ScalarField f(detail::read_grid_header(is));
    is.read(reinterpret_cast<char*>(f.a.data()), std::streamsize(f.a.size() * sizeof(double)));
    if (!is) throw error("field file truncated: " + path);
    return f;
}

inline void write_field_csv(const std::string& path, const ScalarField& f) {
    std::ofstream os(path);
    if (!os) throw error("cannot open '" + path + "' for writing");
    os << (f.grid.d == 1 ? "x,value\n" : "x,y,value\n");
    for (std::size_t i = 0; i < f.a.size(); ++i) {
        Point p = f.grid.point(i);
        os << format_double(p[0]);
        if (f.grid.d == 2) os << ',' << format_double(p[1]);
        os << ',' << format_double(f.a[i]) << '\n';
    }
}

struct StoredPair {
    double hbar = 0.0;
    double lambda = 0.0;
    double residual = 0.0;
    std::uint64_t seed = 0;
    ScalarField psi;
};

inline void write_pair_binary(const std::string& path, const StoredPair& p) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("cannot open '" + path + "' for writing");
    os.write("SCLBPR01", 8);
    detail::write_grid_header(os, p.psi.grid);
    detail::put<double>(os, p.hbar);
    detail::put<double>(os, p.lambda);
    detail::put<double>(os, p.residual);
    detail::put<std::uint64_t>(os, p.seed);
    os.write(reinterpret_cast<const char*>(p.psi.a.data()),
             std::streamsize(p.psi.a.size() * sizeof(double)));
    if (!os) throw error("write failed: '" + path + "'");
}

inline StoredPair read_pair_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "SCLBPR01") throw error("not a pair file: " + path);
    StoredPair p;
    Grid g = detail::read_grid_header(is);
    p.hbar = detail::get<double>(is);
    p.lambda = detail::get<double>(is);
    p.residual = detail::get<double>(is);
    p.seed = detail::get<std::uint64_t>(is);
    p.psi = ScalarField(g);
    is.read(reinterpret_cast<char*>(p.psi.a.data()),
            std::streamsize(p.psi.a.size() * sizeof(double)));
    if (!is) throw error("pair file truncated: " + path);
    return p;
}

}  // namespace sclab
