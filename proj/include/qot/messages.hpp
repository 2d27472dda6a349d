// messages.hpp
// Typed protocol messages and the line-delimited transcript.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qot/channel.hpp"
#include "qot/commitment.hpp"

namespace qot::protocol {

using channel::Basis;
using commitment::CommitmentId;
using Json = nlohmann::ordered_json;

enum class Party : std::uint8_t { Alice, Bob };

inline const char* party_tag(Party p) noexcept { return p == Party::Alice ? "A" : "B"; }
inline Party other(Party p) noexcept { return p == Party::Alice ? Party::Bob : Party::Alice; }

enum class Status : std::uint8_t {
    Completed,
    AbortInsufficientMatches,
    AbortCheatDetected,
    AbortInvalidMessage,
};

inline const char* to_string(Status s) noexcept {
    switch (s) {
        case Status::Completed: return "Completed";
        case Status::AbortInsufficientMatches: return "AbortInsufficientMatches";
        case Status::AbortCheatDetected: return "AbortCheatDetected";
        case Status::AbortInvalidMessage: return "AbortInvalidMessage";
    }
    return "?";
}

// Slot-indexed partition of the surviving indices. Slots are 0-based;
// subsets are kept sorted.
struct SubsetFamily {
    std::vector<std::vector<std::size_t>> subsets;
    friend bool operator==(const SubsetFamily&, const SubsetFamily&) = default;
};

struct MaskedBits {
    std::vector<Bit> bits;
    friend bool operator==(const MaskedBits&, const MaskedBits&) = default;
};

// Which of Bob's committed quantities a commitment holds.
enum class Field : std::uint8_t { Bit, Basis };

inline const char* to_string(Field f) noexcept { return f == Field::Bit ? "r" : "basis"; }

// Step 1, A -> B.
struct PhotonTransmission {
    std::vector<channel::Photon> photons;
};

// Step 2, B -> A. Commitments to bit and basis of index i, then of index N+i.
struct SlotCommitments {
    std::size_t slot = 0;
    std::array<CommitmentId, 4> ids{};
};

// Step 2, A -> B.
struct Challenge {
    std::size_t slot = 0;
    Bit d = 0;
};

// Bob's request to the commitment functionality. A set `forged` value asks
// for a cheating unveil to that value.
struct OpenRequest {
    CommitmentId id = 0;
    std::optional<Bit> forged;
};

struct UnveilRequest {
    int step = 2;
    std::vector<OpenRequest> requests;
};

// What the commitment functionality delivers to Alice for an UnveilRequest.
struct OpenedValue {
    CommitmentId id = 0;
    Bit value = 0;
    commitment::Verdict verdict = commitment::Verdict::Accepted;
    bool forged = false;
};

struct Openings {
    int step = 2;
    std::vector<OpenedValue> values;
};

// Step 3, A -> B. Alice's bases for slots 1..N after renaming.
struct BasisAnnouncement {
    std::vector<Basis> bases;
};

// Step 4, B -> A. Slots Bob removes; followed by the unveils of their commitments.
struct RemovalAnnouncement {
    std::vector<std::size_t> slots;
};

// Step 5, B -> A.
struct SubsetAnnouncement {
    SubsetFamily family;
};

// Step 6, A -> B.
struct MaskedAnnouncement {
    MaskedBits masked;
};

struct Abort {
    int step = 0;
    Status reason = Status::AbortInvalidMessage;
    std::string detail;
};

using Message = std::variant<PhotonTransmission, SlotCommitments, Challenge, UnveilRequest, Openings,
                             BasisAnnouncement, RemovalAnnouncement, SubsetAnnouncement, MaskedAnnouncement, Abort>;

struct Envelope {
    Party from;
    Message message;
};

// ---------------------------------------------------------------------------
// Transcript

struct TranscriptEntry {
    int step = 0;
    Party from = Party::Alice;
    std::string kind;
    Json payload;
};

// Ordered log of every delivered message. Serialized as one JSON object per
// line with keys seq, step, from, kind, payload; indices are 1-based.
class Transcript {
  public:
    void add(int step, Party from, std::string kind, Json payload) {
        entries_.push_back({step, from, std::move(kind), std::move(payload)});
    }

    const std::vector<TranscriptEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    // Entries received by `party`.
    std::vector<TranscriptEntry> view_of(Party party) const {
        std::vector<TranscriptEntry> out;
        for (const auto& e : entries_)
            if (e.from != party) out.push_back(e);
        return out;
    }

    static Json line(std::size_t seq, const TranscriptEntry& e) {
        Json j;
        j["seq"] = seq;
        j["step"] = e.step;
        j["from"] = party_tag(e.from);
        j["kind"] = e.kind;
        j["payload"] = e.payload;
        return j;
    }

    std::string to_jsonl() const {
        std::string out;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            out += line(i + 1, entries_[i]).dump();
            out += '\n';
        }
        return out;
    }

  private:
    std::vector<TranscriptEntry> entries_;
};

inline std::string bits_string(const std::vector<Bit>& bits) {
    std::string s;
    s.reserve(bits.size());
    for (Bit b : bits) s += static_cast<char>('0' + b);
    return s;
}

inline std::string bases_string(const std::vector<Basis>& bases) {
    std::string s;
    s.reserve(bases.size());
    for (Basis b : bases) s += static_cast<char>('0' + channel::to_bit(b));
    return s;
}

inline Json one_based(const std::vector<std::size_t>& xs) {
    Json arr = Json::array();
    for (auto v : xs) arr.push_back(v + 1);
    return arr;
}

}  // namespace qot::protocol
