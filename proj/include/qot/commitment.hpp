// commitment.hpp
// Weak bit commitment modeled as an ideal functionality.
//
// The ledger stores committed values on behalf of the committer and reveals
// them only on unveil, so hiding is perfect in simulation. Weakness of the
// binding property is injected through CheatModel: a forged unveil is accepted
// with probability p and rejected otherwise.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qot/random.hpp"

namespace qot::commitment {

using CommitmentId = std::uint32_t;

struct CommitmentHandle {
    CommitmentId id = 0;
    friend bool operator==(const CommitmentHandle&, const CommitmentHandle&) = default;
};

enum class Verdict : std::uint8_t { Accepted, Rejected };

inline const char* to_string(Verdict v) noexcept {
    return v == Verdict::Accepted ? "accepted" : "rejected";
}

struct Opening {
    Bit value = 0;
    Verdict verdict = Verdict::Accepted;
    bool forged = false;
};

class CommitmentError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

// Probability that a forged unveil goes undetected. Must lie in (0, 1).
class CheatModel {
  public:
    explicit CheatModel(double p) : p_(p) {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("cheat probability must lie in (0, 1), got " + std::to_string(p));
    }
    double p() const noexcept { return p_; }

  private:
    double p_;
};

// One commitment session. Ids are assigned sequentially from 0 and are
// unique within the session. Single writer.
class Ledger {
  public:
    CommitmentHandle commit(Bit value) {
        if (value > 1) throw std::invalid_argument("commit: value must be 0 or 1");
        entries_.push_back(Entry{value, false});
        return CommitmentHandle{static_cast<CommitmentId>(entries_.size() - 1)};
    }

    // A commitment that is not bound to any value. Only a cheating committer
    // creates one; every later opening of it is a forgery.
    CommitmentHandle commit_unbound() {
        entries_.push_back(Entry{std::nullopt, false});
        return CommitmentHandle{static_cast<CommitmentId>(entries_.size() - 1)};
    }

    Opening unveil(CommitmentHandle handle) {
        Entry& e = open(handle);
        if (!e.value) throw CommitmentError("honest unveil of unbound commitment " + std::to_string(handle.id));
        return Opening{*e.value, Verdict::Accepted, false};
    }

    Opening cheat_unveil(CommitmentHandle handle, Bit forged, const CheatModel& cheat, RandomSource& rng) {
        if (forged > 1) throw std::invalid_argument("cheat_unveil: forged value must be 0 or 1");
        Entry& e = at(handle);
        if (e.value && *e.value == forged)
            throw CommitmentError("cheat_unveil: forged value equals committed value of commitment " +
                                  std::to_string(handle.id));
        open(handle);
        const bool accepted = rng.bernoulli(cheat.p());
        return Opening{forged, accepted ? Verdict::Accepted : Verdict::Rejected, true};
    }

    bool is_opened(CommitmentHandle handle) const { return entries_.at(handle.id).opened; }
    bool is_bound(CommitmentHandle handle) const { return entries_.at(handle.id).value.has_value(); }
    std::size_t size() const noexcept { return entries_.size(); }

  private:
    struct Entry {
        std::optional<Bit> value;
        bool opened;
    };

    Entry& at(CommitmentHandle handle) {
        if (handle.id >= entries_.size())
            throw CommitmentError("unknown commitment " + std::to_string(handle.id));
        return entries_[handle.id];
    }

    Entry& open(CommitmentHandle handle) {
        Entry& e = at(handle);
        if (e.opened) throw CommitmentError("commitment " + std::to_string(handle.id) + " opened twice");
        e.opened = true;
        return e;
    }

    std::vector<Entry> entries_;
};

}  // namespace qot::commitment
