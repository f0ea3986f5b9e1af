#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace closetest {

// Guard failures that map to CLI exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyVectorError : Error { using Error::Error; };
struct NegativeEntryError : Error { using Error::Error; };
struct ZeroSumError : Error { using Error::Error; };
struct DimensionMismatchError : Error { using Error::Error; };
struct KTooSmallError : Error { using Error::Error; };
struct KTooLargeForDeskError : Error { using Error::Error; };
struct BudgetTooSmallError : Error { using Error::Error; };
struct UnreachableError : Error { using Error::Error; };
struct BadParameterError : Error { using Error::Error; };
struct RenormalizationImpossibleError : Error { using Error::Error; };
struct RetryCapExceededError : Error { using Error::Error; };

// Neumaier-compensated accumulator. Totals over long probability vectors
// have to stay well inside the 1e-12 normalization tolerance, which plain
// left-to-right summation does not guarantee past d ~ 1e4.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace closetest
