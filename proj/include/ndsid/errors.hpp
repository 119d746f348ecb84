#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ndsid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Matrix or vector shapes that do not fit together.
class DimensionError : public Error {
   public:
    using Error::Error;
};

/// A modelling assumption (distinct generator eigenvalues, ...) does not hold.
class AssumptionViolation : public Error {
   public:
    using Error::Error;
};

/// The pencil sE - A is singular at the requested point.
class EvaluationError : public Error {
   public:
    EvaluationError(const std::string& what, std::complex<double> s) : Error(what), point_(s) {}
    std::complex<double> point() const noexcept { return point_; }

   private:
    std::complex<double> point_;
};

/// A generator eigenvalue coincides with a generalized eigenvalue of the pencil.
class EigenvalueCollision : public Error {
   public:
    EigenvalueCollision(const std::string& what, std::complex<double> generator_eig,
                        std::complex<double> pencil_eig)
        : Error(what), generator_eig_(generator_eig), pencil_eig_(pencil_eig) {}
    std::complex<double> generator_eigenvalue() const noexcept { return generator_eig_; }
    std::complex<double> pencil_eigenvalue() const noexcept { return pencil_eig_; }

   private:
    std::complex<double> generator_eig_;
    std::complex<double> pencil_eig_;
};

/// I - D_zv Phi is singular, internal signals are not uniquely determined.
class WellPosednessError : public Error {
   public:
    using Error::Error;
};

/// Time-domain simulation needs an invertible E after eliminating z.
class UnsupportedDescriptorSimulation : public Error {
   public:
    using Error::Error;
};

class InsufficientData : public Error {
   public:
    using Error::Error;
};

/// RLS was fed a sample taken before the settling bound.
class PreSettlingSample : public Error {
   public:
    using Error::Error;
};

/// Malformed configuration, model document or dataset file.
class InputError : public Error {
   public:
    using Error::Error;
};

}  // namespace ndsid
