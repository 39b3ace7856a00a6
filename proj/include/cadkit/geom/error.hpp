#pragma once

#include <stdexcept>
#include <string>

namespace cadkit::geom {

class GeomError : public std::runtime_error {
 public:
  enum class Kind {
    OpenLoop,
    DegenerateLoop,
    SelfIntersection,
    LoopCrossing,
    MalformedLoop,
    ZeroExtent,
    DegenerateExtrude,
    MissingSketch,
    EmptyResult,
    SamplingExhausted,
  };

  GeomError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(GeomError::Kind kind);

}  // namespace cadkit::geom
