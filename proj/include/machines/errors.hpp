#pragma once

#include <stdexcept>

namespace machines {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Partition construction and use.
struct OverlappingBlocks : Error { using Error::Error; };
struct UncoveredIndices : Error { using Error::Error; };
struct EmptyBlock : Error { using Error::Error; };
struct BlockIndexOutOfRange : Error { using Error::Error; };

// Linear algebra layer.
struct SizeMismatch : Error { using Error::Error; };
struct NotNilpotent : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct NotIndependent : Error { using Error::Error; };
struct RankDeficientBasis : Error { using Error::Error; };
struct ChainNotDecreasing : Error { using Error::Error; };

// Machine evaluation.
struct NonFiniteInput : Error { using Error::Error; };
struct StateMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct WrongPartitionTag : Error { using Error::Error; };

// Verification and CLI.
struct NonFiniteEvaluation : Error { using Error::Error; };
struct ConfigParseError : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };

}  // namespace machines
