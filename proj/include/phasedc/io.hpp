#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dc.hpp"
#include "ensemble.hpp"
#include "signal.hpp"

namespace phasedc {

// CSV layout shared by ensembles and signals:
//
//   field,n,m
//   <real|complex>,<n>,<m>
//   m rows of embedded coordinates (n or 2n columns)
//
// Ensemble rows append b_i as a final column when values are populated. A
// signal is written with m = 1. Numbers use 17 significant digits, so a
// round trip is exact.

namespace detail {

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& text)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("csv: bad number '" + text + "'");
    }
    if (used != text.size()) throw std::runtime_error("csv: bad number '" + text + "'");
    return v;
}

inline std::size_t parse_count(const std::string& text)
{
    const double v = parse_double(text);
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw std::runtime_error("csv: bad count '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

inline void write_row(std::ostream& os, const double* first, Eigen::Index count, const double* extra = nullptr)
{
    for (Eigen::Index j = 0; j < count; ++j) {
        if (j) os << ',';
        os << format_double(first[j]);
    }
    if (extra) os << ',' << format_double(*extra);
    os << '\n';
}

struct CsvHeader
{
    FieldTag field;
    std::size_t n;
    std::size_t m;
};

inline CsvHeader read_header(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "field,n,m") throw std::runtime_error("csv: expected header 'field,n,m'");
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing shape row");
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw std::runtime_error("csv: shape row needs 3 cells");
    return {parse_field(cells[0]), parse_count(cells[1]), parse_count(cells[2])};
}

} // namespace detail

inline void write_ensemble_csv(std::ostream& os, const MeasurementEnsemble& ens)
{
    os << "field,n,m\n" << to_string(ens.field()) << ',' << ens.n() << ',' << ens.m() << '\n';
    const Matrix& a = ens.vectors();
    const bool values = ens.has_values();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Vector row = a.row(i).transpose();
        const double b = values ? ens.values()[i] : 0.0;
        detail::write_row(os, row.data(), row.size(), values ? &b : nullptr);
    }
}

/// Reads an ensemble written by write_ensemble_csv. The link is always the
/// square modulus.
inline MeasurementEnsemble read_ensemble_csv(std::istream& is)
{
    const auto header = detail::read_header(is);
    const auto d = static_cast<Eigen::Index>(embedded_dim(header.field, header.n));
    const auto m = static_cast<Eigen::Index>(header.m);
    Matrix a(m, d);
    Vector b(m);
    bool has_values = false;
    std::string line;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("csv: expected " + std::to_string(m) + " rows");
        const auto cells = detail::split_csv_line(line);
        const auto count = static_cast<Eigen::Index>(cells.size());
        if (i == 0) has_values = count == d + 1;
        if (count != d + (has_values ? 1 : 0)) throw std::runtime_error("csv: row " + std::to_string(i) + " has wrong width");
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = detail::parse_double(cells[static_cast<std::size_t>(j)]);
        if (has_values) b[i] = detail::parse_double(cells.back());
    }
    if (has_values) return MeasurementEnsemble(header.field, header.n, std::move(a), std::move(b));
    return MeasurementEnsemble(header.field, header.n, std::move(a));
}

inline void write_signal_csv(std::ostream& os, const Signal& x)
{
    os << "field,n,m\n" << to_string(x.field()) << ',' << x.n() << ",1\n";
    detail::write_row(os, x.data().data(), x.data().size());
}

inline Signal read_signal_csv(std::istream& is)
{
    const auto header = detail::read_header(is);
    if (header.m != 1) throw std::runtime_error("csv: a signal has exactly one row");
    const auto d = static_cast<Eigen::Index>(embedded_dim(header.field, header.n));
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing signal row");
    const auto cells = detail::split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != d) throw std::runtime_error("csv: signal row has wrong width");
    Vector data(d);
    for (Eigen::Index j = 0; j < d; ++j) data[j] = detail::parse_double(cells[static_cast<std::size_t>(j)]);
    return Signal(header.field, header.n, std::move(data));
}

inline constexpr const char* trace_csv_header = "iter,F,F1,F2,step_norm,grad_norm,support_size";

inline void write_trace_csv(std::ostream& os, const DcTrace& trace)
{
    using detail::format_double;
    os << trace_csv_header << '\n';
    for (const auto& r : trace.records) {
        os << r.iter << ',' << format_double(r.F) << ',' << format_double(r.F1) << ',' << format_double(r.F2) << ','
           << format_double(r.step_norm) << ',' << format_double(r.grad_norm) << ',' << r.support_size << '\n';
    }
}

} // namespace phasedc
