#ifndef KOOPMAN_ERROR_HPP
#define KOOPMAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace koopman
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Shape mismatches, out-of-range hyperparameters, malformed configs.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Decompositions or training runs that cannot produce a usable result.
class NumericalError : public Error
{
public:
    using Error::Error;
};

/// File and stream failures, including malformed binary containers.
class IoError : public Error
{
public:
    using Error::Error;
};

namespace detail
{

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw InvalidArgument(msg);
}

} // namespace detail
} // namespace koopman

#endif
