#ifndef SKETCHLRA_ERROR_HPP
#define SKETCHLRA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sketchlra {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct DimensionNotSupported : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct ThetaTooLarge : Error { using Error::Error; };
struct RankDeficientSketch : Error { using Error::Error; };
struct ScheduleExhausted : Error { using Error::Error; };
struct GeneratorRankExceeded : Error { using Error::Error; };
struct NotConverged : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace sketchlra

#endif
