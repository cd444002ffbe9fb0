#pragma once

#include <memory>
#include <string>

#include "dbnet/core.hpp"

namespace dbnet {

// Anything that maps a state vector to a critical probability. The 0.5
// threshold is the shared prediction contract across implementations.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual double predict_proba(const Vec& s) const = 0;
    virtual std::string name() const = 0;
    virtual std::uint64_t schema_hash() const = 0;
    virtual json to_json() const = 0;

    bool predict(const Vec& s) const { return predict_proba(s) > 0.5; }
};

}  // namespace dbnet
