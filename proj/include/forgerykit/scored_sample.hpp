#pragma once

#include <string>

namespace forgerykit {

// Interchange unit between a model and the evaluation modules.
struct ScoredSample {
    std::string id;
    int label = 0;       // 1 = tampered (positive class)
    double score = 0.0;  // predicted probability of tampering, in [0, 1]

    friend bool operator==(const ScoredSample&, const ScoredSample&) = default;
};

}  // namespace forgerykit
