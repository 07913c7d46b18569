#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unistd.h>
#include <vector>

#include "pinlab/cleaning.hpp"
#include "pinlab/stats.hpp"

namespace support {

inline std::filesystem::path fixture(std::string_view name) {
    return std::filesystem::path(PINLAB_TEST_DIR) / "fixtures" / name;
}

inline std::filesystem::path golden(std::string_view name) {
    return std::filesystem::path(PINLAB_TEST_DIR) / "golden" / name;
}

inline std::string slurp(std::filesystem::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(std::filesystem::path const& p, std::string_view text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

/// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(std::string_view tag = "t") {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("pinlab-" + std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(std::string_view name) const { return path / name; }
};

/// Rows are models m00.., columns are items i00..; NaN for missing.
inline pinlab::ResponseTable make_table(pinlab::Matrix const& values, std::string condition = "neutral",
                                        std::string prefix = "i") {
    pinlab::ResponseTable t;
    t.condition_id = std::move(condition);
    for (Eigen::Index m = 0; m < values.rows(); ++m) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "p/m%02d", int(m));
        t.models.push_back({"p", buf});
    }
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%s%02d", prefix.c_str(), int(i));
        t.item_ids.push_back(buf);
    }
    t.values = values;
    return t;
}

/// Plain-loop sample variance over non-NaN entries; independent of the library.
inline double brute_variance(std::vector<double> const& xs, int* n_out = nullptr) {
    double sum = 0;
    int n = 0;
    for (double x : xs)
        if (x == x) {
            sum += x;
            ++n;
        }
    if (n_out) *n_out = n;
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double const mean = sum / n;
    double ss = 0;
    for (double x : xs)
        if (x == x) ss += (x - mean) * (x - mean);
    return ss / (n - 1);
}

inline pinlab::Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    pinlab::Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

/// Data with planted orthogonal simple structure: k factors, `per` items each.
inline pinlab::Matrix planted_factors(int n, int k, int per, double loading, double noise_sd, std::mt19937_64& rng) {
    pinlab::Matrix const f = normal_matrix(n, k, rng);
    pinlab::Matrix x = normal_matrix(n, k * per, rng, noise_sd);
    for (int j = 0; j < k * per; ++j) x.col(j) += loading * f.col(j / per);
    return x;
}

inline pinlab::Matrix random_orthogonal(int k, std::mt19937_64& rng) {
    Eigen::HouseholderQR<pinlab::Matrix> qr(normal_matrix(k, k, rng));
    return qr.householderQ() * pinlab::Matrix::Identity(k, k);
}

struct Planted {
    pinlab::Matrix pattern, phi, unrotated;
};

/// Simple-structure pattern (`per` items per factor, loadings U(.5, .8), cross
/// loadings U(-.1, .1)) with factor correlations `r`, mixed by a random rotation.
inline Planted planted_oblique(int k, int per, double r, std::mt19937_64& rng) {
    Planted p;
    p.pattern = pinlab::Matrix::Zero(k * per, k);
    std::uniform_real_distribution<double> u(0.5, 0.8), small(-0.1, 0.1);
    for (int j = 0; j < k * per; ++j)
        for (int f = 0; f < k; ++f) p.pattern(j, f) = f == j / per ? u(rng) : small(rng);
    p.phi = pinlab::Matrix::Constant(k, k, r);
    p.phi.diagonal().setOnes();
    pinlab::Matrix const T = p.phi.llt().matrixU();  // T'T = Phi, unit columns
    p.unrotated = p.pattern * T.transpose() * random_orthogonal(k, rng);
    return p;
}

}  // namespace support
