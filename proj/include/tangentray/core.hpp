#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tangentray {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when an iterative solve fails to reach its target residual.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what, double best_residual = -1.0)
        : std::runtime_error(what), residual(best_residual) {}
    double residual;
};

/// Van der Corput radical inverse; bases 2,3,5,... give a Halton sequence.
inline double radical_inverse(int index, int base) {
    double r = 0.0, f = 1.0 / base;
    for (int i = index; i > 0; i /= base) {
        r += f * (i % base);
        f /= base;
    }
    return r;
}

inline int halton_base(int dim) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    return primes[dim % 10];
}

}  // namespace tangentray
