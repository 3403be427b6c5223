#pragma once

#include <stdexcept>
#include <string>

namespace stagehand {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs violating a documented precondition or invariant. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A file could not be decoded. `element()` names the offending header line, property or record.
class ParseError : public ValidationError {
 public:
  ParseError(std::string element, const std::string& what)
      : ValidationError(what), element_(std::move(element)) {}
  const std::string& element() const { return element_; }

 private:
  std::string element_;
};

// Every baseline sample fell on an invalid depth pixel.
class NoDepthSupportError : public Error {
 public:
  using Error::Error;
};

// The occupancy grid has no free voxel to project onto.
class NoFreeSpaceError : public Error {
 public:
  using Error::Error;
};

// A requested allocation exceeds a configured cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Wraps a failure inside the pipeline with the stage name and (when known) the frame index.
class StageError : public Error {
 public:
  StageError(std::string stage, int frame, const std::string& what, bool validation)
      : Error("[" + stage + (frame >= 0 ? " frame " + std::to_string(frame) : std::string()) +
              "] " + what),
        stage_(std::move(stage)),
        frame_(frame),
        validation_(validation) {}
  const std::string& stage() const { return stage_; }
  int frame() const { return frame_; }
  bool is_validation() const { return validation_; }

 private:
  std::string stage_;
  int frame_;
  bool validation_;
};

}  // namespace stagehand
