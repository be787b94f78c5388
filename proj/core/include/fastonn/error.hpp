#pragma once

#include <stdexcept>
#include <string>

namespace fastonn {

// Base of every error the library throws. Callers that only need a one-line
// diagnostic can catch this and print what().
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class InfeasibleError : public Error { using Error::Error; };
class InternalError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

// Dataset and file-format errors.
class FormatError : public Error { using Error::Error; };
class LengthError : public Error { using Error::Error; };
class PairingError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };

// Calibration errors.
class CalibrationRangeError : public Error { using Error::Error; };

class DeadChannelError : public Error {
public:
    DeadChannelError(std::size_t channel, const std::string& what)
        : Error(what), channel_(channel) {}
    std::size_t channel() const noexcept { return channel_; }

private:
    std::size_t channel_;
};

}  // namespace fastonn
