#pragma once

#include "errors.hpp"
#include "trace.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>

namespace hermes {

/// Handle returned at LQ allocation; carries the prediction and keys the
/// metadata the predictor stored for training.
struct PredictionToken {
    std::uint64_t id = 0;
    bool off_chip = false;
};

/// Uniform off-chip predictor interface. predict_load is called once per
/// demand load at LQ allocation, train_load once when it completes.
class OffChipPredictor {
public:
    virtual ~OffChipPredictor() = default;
    virtual std::string name() const = 0;
    virtual PredictionToken predict_load(const LoadRecord &load) = 0;
    virtual void train_load(const PredictionToken &token, bool went_off_chip) = 0;

    // Cache-content hooks; only tag-tracking predictors care.
    virtual void on_fill(std::uint64_t /*line*/) {}
    virtual void on_llc_evict(std::uint64_t /*line*/) {}
};

/// Outstanding-token bookkeeping shared by the concrete predictors.
template <typename Meta>
class TokenStore {
public:
    PredictionToken put(bool prediction, Meta meta) {
        PredictionToken t{next_++, prediction};
        live_.emplace(t.id, std::move(meta));
        return t;
    }

    /// Removes and returns the metadata; a token can be redeemed once.
    Meta take(const PredictionToken &t) {
        auto it = live_.find(t.id);
        if (it == live_.end())
            throw UsageError("training unknown or already-trained token " + std::to_string(t.id));
        Meta m = std::move(it->second);
        live_.erase(it);
        return m;
    }

    std::size_t outstanding() const { return live_.size(); }

private:
    std::uint64_t next_ = 1;
    std::unordered_map<std::uint64_t, Meta> live_;
};

struct Empty {};

/// Predicts a constant outcome: "never" is the no-Hermes baseline, "always"
/// sends a Hermes request for every load.
class ConstantPredictor final : public OffChipPredictor {
public:
    explicit ConstantPredictor(bool value) : value_(value) {}
    std::string name() const override { return value_ ? "always" : "never"; }
    PredictionToken predict_load(const LoadRecord &) override { return tokens_.put(value_, {}); }
    void train_load(const PredictionToken &t, bool) override { tokens_.take(t); }

private:
    bool value_;
    TokenStore<Empty> tokens_;
};

/// Perfect predictor fed the hierarchy's ground truth.
class OraclePredictor final : public OffChipPredictor {
public:
    using Probe = std::function<bool(std::uint64_t vaddr)>;
    explicit OraclePredictor(Probe probe = {}) : probe_(std::move(probe)) {}
    void set_probe(Probe probe) { probe_ = std::move(probe); }
    std::string name() const override { return "oracle"; }
    PredictionToken predict_load(const LoadRecord &load) override {
        if (!probe_)
            throw UsageError("oracle predictor has no ground-truth probe");
        return tokens_.put(probe_(load.vaddr), {});
    }
    void train_load(const PredictionToken &t, bool) override { tokens_.take(t); }

private:
    Probe probe_;
    TokenStore<Empty> tokens_;
};

} // namespace hermes
