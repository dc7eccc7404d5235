#pragma once

#include <Eigen/Dense>

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "mortl/types.hpp"

namespace mortl {

namespace detail {

inline std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] inline void parse_fail(const std::string& path, long line, const std::string& msg) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace detail

/// Reads a Matrix Market file (array or coordinate format, real or integer
/// field, general/symmetric/skew-symmetric storage) into a dense matrix.
inline DenseMatrix<double> read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path + ": cannot open file");
    }

    long lineno = 0;
    std::string line;
    if (!std::getline(in, line)) {
        detail::parse_fail(path, 1, "empty file");
    }
    ++lineno;

    std::istringstream banner(line);
    std::string magic, object, format, field, symmetry;
    banner >> magic >> object >> format >> field >> symmetry;
    if (magic != "%%MatrixMarket") {
        detail::parse_fail(path, lineno, "missing %%MatrixMarket banner");
    }
    object = detail::lowercase(object);
    format = detail::lowercase(format);
    field = detail::lowercase(field);
    symmetry = detail::lowercase(symmetry);
    if (object != "matrix") {
        detail::parse_fail(path, lineno, "unsupported object '" + object + "'");
    }
    if (format != "coordinate" && format != "array") {
        detail::parse_fail(path, lineno, "unsupported format '" + format + "'");
    }
    if (field != "real" && field != "integer") {
        detail::parse_fail(path, lineno, "unsupported field '" + field + "'");
    }
    if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
        detail::parse_fail(path, lineno, "unsupported symmetry '" + symmetry + "'");
    }

    const auto next_data_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '%') {
                continue;
            }
            return true;
        }
        return false;
    };

    if (!next_data_line()) {
        detail::parse_fail(path, lineno, "missing size line");
    }

    std::istringstream size_line(line);
    Index rows = 0, cols = 0;
    long nnz = 0;
    if (format == "coordinate") {
        if (!(size_line >> rows >> cols >> nnz)) {
            detail::parse_fail(path, lineno, "bad coordinate size line");
        }
    } else {
        if (!(size_line >> rows >> cols)) {
            detail::parse_fail(path, lineno, "bad array size line");
        }
    }
    if (rows <= 0 || cols <= 0) {
        detail::parse_fail(path, lineno, "matrix dimensions must be positive");
    }

    DenseMatrix<double> M = DenseMatrix<double>::Zero(rows, cols);

    if (format == "coordinate") {
        for (long k = 0; k < nnz; ++k) {
            if (!next_data_line()) {
                detail::parse_fail(path, lineno, "unexpected end of file in entry list");
            }
            std::istringstream entry(line);
            Index i = 0, j = 0;
            double v = 0;
            if (!(entry >> i >> j >> v)) {
                detail::parse_fail(path, lineno, "bad coordinate entry");
            }
            if (i < 1 || i > rows || j < 1 || j > cols) {
                detail::parse_fail(path, lineno, "entry index out of range");
            }
            M(i - 1, j - 1) = v;
            if (symmetry == "symmetric" && i != j) {
                M(j - 1, i - 1) = v;
            } else if (symmetry == "skew-symmetric" && i != j) {
                M(j - 1, i - 1) = -v;
            }
        }
    } else {
        // Array data is column-major; symmetric storage lists the lower triangle.
        const auto store = [&](Index i, Index j, double v) {
            M(i, j) = v;
            if (symmetry == "symmetric" && i != j) {
                M(j, i) = v;
            } else if (symmetry == "skew-symmetric" && i != j) {
                M(j, i) = -v;
            }
        };
        for (Index j = 0; j < cols; ++j) {
            const Index i_start = (symmetry == "general") ? 0 : j;
            for (Index i = i_start; i < rows; ++i) {
                if (!next_data_line()) {
                    detail::parse_fail(path, lineno, "unexpected end of file in value list");
                }
                std::istringstream entry(line);
                double v = 0;
                if (!(entry >> v)) {
                    detail::parse_fail(path, lineno, "bad array value");
                }
                store(i, j, v);
            }
        }
    }

    if (!M.allFinite()) {
        detail::parse_fail(path, lineno, "matrix contains non-finite values");
    }
    return M;
}

/// Writes a dense matrix in Matrix Market array format with full double
/// precision, so binary-representable values round-trip exactly.
inline void write_matrix_market(const std::string& path, const DenseMatrix<double>& M) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError(path + ": cannot open file for writing");
    }
    out << "%%MatrixMarket matrix array real general\n";
    out << M.rows() << " " << M.cols() << "\n";
    char buf[64];
    for (Index j = 0; j < M.cols(); ++j) {
        for (Index i = 0; i < M.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", M(i, j));
            out << buf << "\n";
        }
    }
    if (!out) {
        throw ParseError(path + ": write failed");
    }
}

}  // namespace mortl
