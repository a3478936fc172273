#include "textwalk/error.hpp"

namespace textwalk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DescriptorEmpty: return "DescriptorEmpty";
    case ErrorCode::MissingDescriptor: return "MissingDescriptor";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::NotNeighbor: return "NotNeighbor";
    case ErrorCode::IsolatedNode: return "IsolatedNode";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::StaleBackward: return "StaleBackward";
    case ErrorCode::NotEnoughNodes: return "NotEnoughNodes";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::SplitInfeasible: return "SplitInfeasible";
    case ErrorCode::NotEnoughNegatives: return "NotEnoughNegatives";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::UnsupportedEncoder: return "UnsupportedEncoder";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::OutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::BadModelFile: return "BadModelFile";
    case ErrorCode::BadSplitFile: return "BadSplitFile";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace textwalk
