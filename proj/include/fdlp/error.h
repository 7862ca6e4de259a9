// Copyright 2026 The fdlp-dereverb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FDLP_ERROR_H_
#define FDLP_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdlp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Input carries no usable energy (e.g. zero-lag autocorrelation <= 0).
class DegenerateSignal : public Error {
 public:
  using Error::Error;
};

// A recursion or evaluation became ill-conditioned. step() is the
// recursion index at which it happened (0 when not applicable).
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Base class for malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedEncoding : public FormatError {
 public:
  using FormatError::FormatError;
};

class MultiChannelAudio : public FormatError {
 public:
  explicit MultiChannelAudio(int channels)
      : FormatError("expected mono audio, got " + std::to_string(channels) +
                    " channels"),
        channels_(channels) {}
  int channels() const { return channels_; }

 private:
  int channels_;
};

class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};

class CrcMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatch : public FormatError {
 public:
  VersionMismatch(const std::string& format, unsigned found, unsigned supported)
      : FormatError(format + ": unsupported version " + std::to_string(found) +
                    " (supported: " + std::to_string(supported) + ")"),
        found_(found) {}
  unsigned found() const { return found_; }

 private:
  unsigned found_;
};

// Training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch, double param_norm)
      : Error("non-finite loss at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch) +
              ", parameter norm " + std::to_string(param_norm)),
        epoch_(epoch), batch_(batch), param_norm_(param_norm) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }
  double param_norm() const { return param_norm_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
  double param_norm_;
};

}  // namespace fdlp

#endif  // FDLP_ERROR_H_
