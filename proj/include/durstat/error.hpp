#pragma once

#include <stdexcept>
#include <string>

namespace durstat {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A series has too few usable values for the requested operation.
class EmptySeriesError : public Error {
public:
    using Error::Error;
};

// All values identical, single occupied bin, zero variance and similar.
class DegenerateSeriesError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double gradient_norm)
        : Error(what), iterations_(iterations), gradient_norm_(gradient_norm) {}

    int iterations() const noexcept { return iterations_; }
    double gradient_norm() const noexcept { return gradient_norm_; }

private:
    int iterations_;
    double gradient_norm_;
};

// Rank-deficient designs, infinite residuals, non-PSD embeddings.
class NumericError : public Error {
public:
    using Error::Error;
};

class MissingProfileError : public Error {
public:
    MissingProfileError(const std::string& what, int minute) : Error(what), minute_(minute) {}
    int minute() const noexcept { return minute_; }

private:
    int minute_;
};

// A detrended window with zero residual met a non-positive moment order.
class SingularWindowError : public Error {
public:
    SingularWindowError(const std::string& what, std::size_t window) : Error(what), window_(window) {}
    std::size_t window() const noexcept { return window_; }

private:
    std::size_t window_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace durstat
