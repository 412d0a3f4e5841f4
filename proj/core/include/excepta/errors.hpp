#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace excepta {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: shapes, ranges, malformed configs.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A numerical procedure could not deliver its contract. `diagnostics` holds
// named scalars (residuals, iteration counts, coordinates) for reporting.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what,
                            std::map<std::string, double> diagnostics = {})
        : Error(what), diagnostics_(std::move(diagnostics)) {}

    const std::map<std::string, double>& diagnostics() const { return diagnostics_; }

private:
    std::map<std::string, double> diagnostics_;
};

class SingularMatrixError : public NumericalError {
public:
    SingularMatrixError(const std::string& what, int estimated_rank)
        : NumericalError(what, {{"estimated_rank", static_cast<double>(estimated_rank)}}),
          rank_(estimated_rank) {}

    int estimated_rank() const { return rank_; }

private:
    int rank_;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::vector<std::complex<double>> best,
                     double residual, std::map<std::string, double> extra = {})
        : NumericalError(what, with_residual(std::move(extra), residual)),
          best_(std::move(best)), residual_(residual) {}

    const std::vector<std::complex<double>>& best_iterate() const { return best_; }
    double residual() const { return residual_; }

private:
    static std::map<std::string, double> with_residual(std::map<std::string, double> d, double r) {
        d["residual"] = r;
        return d;
    }
    std::vector<std::complex<double>> best_;
    double residual_;
};

}  // namespace excepta
