#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lzspa/errors.hpp"

namespace lzspa {

/// Per-clip feature vectors (n x d), used only for the embedding-based
/// Fréchet distance. The toolkit ingests these; it never computes them.
struct EmbeddingSet {
    std::string label;
    Eigen::MatrixXd rows;

    std::size_t count() const { return static_cast<std::size_t>(rows.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

/// CSV layout: first line "dim=<d>", then one comma-separated d-vector
/// per clip.
inline EmbeddingSet read_embeddings_csv(std::istream& in, std::string label = {}) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("embedding file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("dim=", 0) != 0)
        throw FormatError("embedding file must start with a dim=<d> line");
    std::size_t dim = 0;
    try {
        dim = std::stoul(line.substr(4));
    } catch (const std::exception&) {
        throw FormatError("cannot parse embedding dimension from '" + line + "'");
    }
    if (dim == 0) throw FormatError("embedding dimension must be positive");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(dim);
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                if (!std::isfinite(v)) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw FormatError("bad embedding value '" + cell + "' on line " +
                                  std::to_string(line_no));
            }
        }
        if (row.size() != dim)
            throw FormatError("embedding row on line " + std::to_string(line_no) + " has " +
                              std::to_string(row.size()) + " values, expected " +
                              std::to_string(dim));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw FormatError("embedding file needs at least 2 rows to fit a Gaussian");

    EmbeddingSet set;
    set.label = std::move(label);
    set.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j)
            set.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return set;
}

inline EmbeddingSet load_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return read_embeddings_csv(in, path.filename().string());
}

namespace frechet_detail {

/// Symmetric PSD square root; negative eigenvalues from roundoff clip to 0.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw Error("eigendecomposition failed in frechet_distance");
    Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
}

} // namespace frechet_detail

/// Fréchet distance between Gaussians fitted to two embedding sets:
///
///   ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)
///
/// with unbiased covariances plus a 1e-6 diagonal regularizer.
inline double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("frechet_distance: embedding dimensions differ (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) +
                                ")");
    if (a.count() < 2 || b.count() < 2)
        throw InvalidArgument("frechet_distance: need at least 2 embeddings per side");

    auto fit = [](const Eigen::MatrixXd& rows) {
        const Eigen::Index n = rows.rows(), d = rows.cols();
        Eigen::VectorXd mu = rows.colwise().mean();
        Eigen::MatrixXd centered = rows.rowwise() - mu.transpose();
        Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
        cov += 1e-6 * Eigen::MatrixXd::Identity(d, d);
        return std::make_pair(std::move(mu), std::move(cov));
    };

    const auto [mu_a, cov_a] = fit(a.rows);
    const auto [mu_b, cov_b] = fit(b.rows);

    const Eigen::MatrixXd root_a = frechet_detail::psd_sqrt(cov_a);
    Eigen::MatrixXd inner = root_a * cov_b * root_a;
    inner = 0.5 * (inner + inner.transpose()); // clean up asymmetry from roundoff
    const Eigen::MatrixXd cross = frechet_detail::psd_sqrt(inner);

    const double mean_term = (mu_a - mu_b).squaredNorm();
    const double trace_term = (cov_a + cov_b - 2.0 * cross).trace();
    return std::max(0.0, mean_term + trace_term);
}

} // namespace lzspa
