#pragma once

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>

#include "mortl/matrix_market.hpp"
#include "mortl/types.hpp"

namespace mortl {

/// JSON manifest binding the three Matrix Market files of a model. Relative
/// paths are resolved against the manifest's directory.
struct ModelManifest {
    std::string name;
    std::filesystem::path A, B, C;
    std::optional<double> tau;
};

inline ModelManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string() + ": cannot open manifest");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }

    ModelManifest m;
    try {
        m.name = j.value("name", path.stem().string());
        const auto base = path.parent_path();
        const auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : base / fp;
        };
        m.A = resolve(j.at("A").get<std::string>());
        m.B = resolve(j.at("B").get<std::string>());
        m.C = resolve(j.at("C").get<std::string>());
        if (j.contains("tau")) {
            m.tau = j.at("tau").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return m;
}

struct LoadedModel {
    StateSpace<double> model;
    std::string name;
    std::optional<double> tau;
};

/// Loads a state-space model from a JSON manifest referencing Matrix Market
/// files. Sparse (coordinate) inputs are densified.
inline LoadedModel load_model(const std::filesystem::path& manifest_path) {
    const ModelManifest m = load_manifest(manifest_path);
    DenseMatrix<double> A = read_matrix_market(m.A.string());
    DenseMatrix<double> B = read_matrix_market(m.B.string());
    DenseMatrix<double> C = read_matrix_market(m.C.string());
    return LoadedModel{StateSpace<double>(std::move(A), std::move(B), std::move(C)), m.name,
                       m.tau};
}

/// Writes the model's matrices as <prefix>A.mtx / B.mtx / C.mtx plus a
/// manifest <prefix>manifest.json in `dir`. Returns the manifest path.
inline std::filesystem::path save_model(const std::filesystem::path& dir,
                                        const std::string& prefix, const StateSpace<double>& model,
                                        const std::string& name,
                                        std::optional<double> tau = std::nullopt) {
    std::filesystem::create_directories(dir);
    const std::string a = prefix + "A.mtx", b = prefix + "B.mtx", c = prefix + "C.mtx";
    write_matrix_market((dir / a).string(), model.A);
    write_matrix_market((dir / b).string(), model.B);
    write_matrix_market((dir / c).string(), model.C);

    nlohmann::json j;
    j["name"] = name;
    j["A"] = a;
    j["B"] = b;
    j["C"] = c;
    if (tau) {
        j["tau"] = *tau;
    }
    const auto manifest_path = dir / (prefix + "manifest.json");
    std::ofstream out(manifest_path);
    out << j.dump(2) << "\n";
    if (!out) {
        throw ParseError(manifest_path.string() + ": write failed");
    }
    return manifest_path;
}

// ----------------------------------------------------------------------------
// Seeded random models for tests and demos
// ----------------------------------------------------------------------------

inline constexpr std::uint64_t kDefaultSeed = 20240611u;

/// Seed for randomized runs: MORTL_SEED from the environment when set,
/// otherwise the fixed default.
inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("MORTL_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') {
            return static_cast<std::uint64_t>(v);
        }
    }
    return kDefaultSeed;
}

/// Damped-structure-like random model: A = D + 0.1 N with D diagonal,
/// log-spaced in [-10, -0.1], and N standard normal; B and C standard normal.
inline StateSpace<double> random_stable_model(Index n, Index m, Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    DenseMatrix<double> A = DenseMatrix<double>::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        const double t = (n == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        A(i, i) = -std::pow(10.0, -1.0 + 2.0 * t);  // -0.1 .. -10, log-spaced
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            A(i, j) += 0.1 * gauss(rng);
        }
    }
    DenseMatrix<double> B(n, m), C(p, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < m; ++j) B(i, j) = gauss(rng);
    }
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < n; ++j) C(i, j) = gauss(rng);
    }
    return StateSpace<double>(std::move(A), std::move(B), std::move(C));
}

/// Shifts the spectrum so the rightmost eigenvalue sits at +0.1: a mildly
/// unstable variant of the same dynamics.
inline StateSpace<double> make_mildly_unstable(StateSpace<double> model) {
    const auto eigs = model.A.eigenvalues();
    double abscissa = eigs(0).real();
    for (Index i = 1; i < eigs.size(); ++i) {
        abscissa = std::max(abscissa, eigs(i).real());
    }
    model.A.diagonal().array() += 0.1 - abscissa;
    return model;
}

}  // namespace mortl
