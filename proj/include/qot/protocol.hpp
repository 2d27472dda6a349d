// protocol.hpp
// m-out-of-n oblivious transfer over the BB84 channel.
//
// Alice and Bob are message-driven state machines. A Session relays their
// messages in order, routes Bob's unveil requests through the commitment
// functionality, and optionally records the transcript. Bob's decisions are
// virtual hooks so dishonest strategies can replace individual steps while
// the honest counterpart keeps every check.
//
// The free functions phase1_transmit .. decode compute the same steps over
// omniscient IndexRecords; with the same random streams they reproduce an
// honest session exactly.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qot/channel.hpp"
#include "qot/commitment.hpp"
#include "qot/messages.hpp"
#include "qot/params.hpp"
#include "qot/random.hpp"

namespace qot::protocol {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Stream labels. A trial's streams are (seed, label, trial).
inline constexpr const char* kAliceStream = "alice";
inline constexpr const char* kBobStream = "bob";
inline constexpr const char* kLedgerStream = "ledger";
inline constexpr const char* kChannelStream = "channel";

// Bob's m distinct choices, stored 0-based in the order given.
class ChoiceVector {
  public:
    ChoiceVector() = default;

    static ChoiceVector from_zero_based(std::vector<std::size_t> labels, std::int64_t n, std::int64_t m) {
        if (static_cast<std::int64_t>(labels.size()) != m)
            throw std::invalid_argument("choice vector needs exactly m=" + std::to_string(m) + " entries, got " +
                                        std::to_string(labels.size()));
        std::vector<std::size_t> sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("choice vector entries must be distinct");
        for (auto c : labels)
            if (static_cast<std::int64_t>(c) >= n)
                throw std::invalid_argument("choice " + std::to_string(c + 1) + " outside 1.." + std::to_string(n));
        ChoiceVector v;
        v.labels_ = std::move(labels);
        return v;
    }

    static ChoiceVector from_one_based(const std::vector<std::int64_t>& choices, std::int64_t n, std::int64_t m) {
        std::vector<std::size_t> labels;
        for (auto c : choices) {
            if (c < 1 || c > n)
                throw std::invalid_argument("choice " + std::to_string(c) + " outside 1.." + std::to_string(n));
            labels.push_back(static_cast<std::size_t>(c - 1));
        }
        return from_zero_based(std::move(labels), n, m);
    }

    const std::vector<std::size_t>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool contains(std::size_t label) const {
        return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
    }

  private:
    std::vector<std::size_t> labels_;
};

// Alice's n input bits.
class InputBits {
  public:
    InputBits() = default;
    InputBits(std::vector<Bit> bits, std::int64_t n) : bits_(std::move(bits)) {
        if (static_cast<std::int64_t>(bits_.size()) != n)
            throw std::invalid_argument("input needs exactly n=" + std::to_string(n) + " bits, got " +
                                        std::to_string(bits_.size()));
        for (Bit b : bits_)
            if (b > 1) throw std::invalid_argument("input bits must be 0 or 1");
    }
    const std::vector<Bit>& bits() const noexcept { return bits_; }
    Bit operator[](std::size_t k) const { return bits_.at(k); }

  private:
    std::vector<Bit> bits_;
};

// Omniscient view of one index: Alice's and Bob's values side by side.
struct IndexRecord {
    std::size_t index = 0;  // original 0-based index in 0..2N-1
    Bit alice_bit = 0;
    Basis alice_basis = Basis::Rectilinear;
    Bit bob_bit = 0;
    Basis bob_basis = Basis::Rectilinear;
    bool match = false;
    bool removed = false;
    commitment::CommitmentHandle bit_commit{};
    commitment::CommitmentHandle basis_commit{};
};

// ---------------------------------------------------------------------------
// Step kernels shared by the state machines and the free step functions.

// Uniformly random x-subset of `eligible`, sorted; nullopt if too few.
inline std::optional<std::vector<std::size_t>> draw_removal(std::vector<std::size_t> eligible, std::size_t x,
                                                            RandomSource& rng) {
    if (eligible.size() < x) return std::nullopt;
    sample_front(std::span<std::size_t>(eligible), x, rng);
    eligible.resize(x);
    std::sort(eligible.begin(), eligible.end());
    return eligible;
}

enum class FillOrder : std::uint8_t {
    Uniform,      // uniformly random legal family
    LowestFirst,  // all-good subsets take the lowest good slots (leaks the choice)
};

// Builds a family of n subsets of size s. Every label in `all_good_labels`
// receives s slots from `good`; the remaining slots are spread uniformly over
// the other labels. nullopt if `good` is too small.
inline std::optional<SubsetFamily> fill_family(std::vector<std::size_t> good, std::vector<std::size_t> rest,
                                               const std::vector<std::size_t>& all_good_labels, std::size_t n,
                                               std::size_t s, RandomSource& rng,
                                               FillOrder order = FillOrder::Uniform) {
    const std::size_t need = all_good_labels.size() * s;
    if (good.size() < need) return std::nullopt;
    if (good.size() + rest.size() != n * s) throw std::logic_error("fill_family: slot count is not n*s");

    if (order == FillOrder::Uniform) {
        sample_front(std::span<std::size_t>(good), need, rng);
    } else {
        std::sort(good.begin(), good.end());
    }

    SubsetFamily family;
    family.subsets.assign(n, {});
    std::vector<bool> taken(n, false);
    std::size_t pos = 0;
    for (auto label : all_good_labels) {
        family.subsets[label].assign(good.begin() + static_cast<std::ptrdiff_t>(pos),
                                     good.begin() + static_cast<std::ptrdiff_t>(pos + s));
        taken[label] = true;
        pos += s;
    }
    rest.insert(rest.end(), good.begin() + static_cast<std::ptrdiff_t>(need), good.end());
    shuffle(std::span<std::size_t>(rest), rng);
    pos = 0;
    for (std::size_t label = 0; label < n; ++label) {
        if (taken[label]) continue;
        family.subsets[label].assign(rest.begin() + static_cast<std::ptrdiff_t>(pos),
                                     rest.begin() + static_cast<std::ptrdiff_t>(pos + s));
        pos += s;
    }
    for (auto& subset : family.subsets) std::sort(subset.begin(), subset.end());
    return family;
}

// Empty string iff the family is legal: n disjoint subsets of size s covering
// exactly the non-removed slots.
inline std::string family_violation(const SubsetFamily& family, const ProtocolParams& params,
                                    const std::vector<bool>& removed) {
    if (static_cast<std::int64_t>(family.subsets.size()) != params.n)
        return "expected " + std::to_string(params.n) + " subsets, got " + std::to_string(family.subsets.size());
    std::vector<bool> seen(static_cast<std::size_t>(params.N), false);
    for (std::size_t k = 0; k < family.subsets.size(); ++k) {
        const auto& subset = family.subsets[k];
        if (static_cast<std::int64_t>(subset.size()) != params.subset_size)
            return "subset " + std::to_string(k + 1) + " has size " + std::to_string(subset.size());
        for (auto slot : subset) {
            if (static_cast<std::int64_t>(slot) >= params.N) return "slot " + std::to_string(slot + 1) + " out of range";
            if (removed[slot]) return "slot " + std::to_string(slot + 1) + " was removed";
            if (seen[slot]) return "slot " + std::to_string(slot + 1) + " appears twice";
            seen[slot] = true;
        }
    }
    return {};
}

template <typename BitOfSlot>
Bit subset_parity(const std::vector<std::size_t>& subset, BitOfSlot&& bit_of) {
    Bit acc = 0;
    for (auto slot : subset) acc ^= bit_of(slot);
    return acc;
}

// Masked bit k = input bit k xor parity of Alice's photon bits over subset k.
template <typename BitOfSlot>
MaskedBits mask_with(const InputBits& inputs, const SubsetFamily& family, BitOfSlot&& alice_bit) {
    MaskedBits out;
    out.bits.reserve(family.subsets.size());
    for (std::size_t k = 0; k < family.subsets.size(); ++k)
        out.bits.push_back(static_cast<Bit>(inputs[k] ^ subset_parity(family.subsets[k], alice_bit)));
    return out;
}

// ---------------------------------------------------------------------------
// Alice

struct AliceOptions {
    // Reject low-case removals whose bases do not match, in addition to the
    // implication check.
    bool strict_removal_check = false;
};

class Alice {
  public:
    Alice(const ProtocolParams& params, InputBits inputs, RandomSource rng, AliceOptions options = {})
        : params_(params), inputs_(std::move(inputs)), rng_(rng), options_(options) {}

    std::vector<Message> start() {
        const auto total = static_cast<std::size_t>(2 * params_.N);
        photon_bits_.resize(total);
        photon_bases_.resize(total);
        PhotonTransmission tx;
        tx.photons.reserve(total);
        for (std::size_t i = 0; i < total; ++i) {
            photon_bits_[i] = rng_.bit();
            photon_bases_[i] = channel::basis_from_bit(rng_.bit());
            tx.photons.push_back(channel::encode(photon_bits_[i], photon_bases_[i]));
        }
        bit_commit_id_.assign(total, 0);
        basis_commit_id_.assign(total, 0);
        phase_ = Phase::AwaitCommitments;
        std::vector<Message> out;
        out.emplace_back(std::move(tx));
        return out;
    }

    std::vector<Message> receive(const Message& message) {
        return std::visit(overloaded{
                              [&](const SlotCommitments& m) { return on(m); },
                              [&](const Openings& m) { return on(m); },
                              [&](const RemovalAnnouncement& m) { return on(m); },
                              [&](const SubsetAnnouncement& m) { return on(m); },
                              [&](const Abort& m) { return on(m); },
                              [&](const auto&) { return abort(current_step(), Status::AbortInvalidMessage,
                                                               "unexpected message for Alice"); },
                          },
                          message);
    }

    Status status() const noexcept { return status_; }
    bool finished() const noexcept { return phase_ == Phase::Done || phase_ == Phase::Aborted; }

    Bit bit(std::size_t index) const { return photon_bits_.at(index); }
    Basis basis(std::size_t index) const { return photon_bases_.at(index); }
    const std::vector<std::size_t>& survivors() const noexcept { return survivor_; }
    const std::vector<std::size_t>& removal() const noexcept { return removal_; }
    const std::optional<SubsetFamily>& family() const noexcept { return family_; }
    const std::vector<Bit>& challenges() const noexcept { return challenges_; }

  private:
    enum class Phase {
        Idle,
        AwaitCommitments,
        AwaitOpenings,
        AwaitRemoval,
        AwaitRemovalOpenings,
        AwaitSubsets,
        Done,
        Aborted
    };

    int current_step() const noexcept {
        switch (phase_) {
            case Phase::Idle: return 1;
            case Phase::AwaitCommitments:
            case Phase::AwaitOpenings: return 2;
            case Phase::AwaitRemoval:
            case Phase::AwaitRemovalOpenings: return 4;
            case Phase::AwaitSubsets: return 5;
            default: return 6;
        }
    }

    std::vector<Message> abort(int step, Status reason, std::string detail) {
        phase_ = Phase::Aborted;
        status_ = reason;
        std::vector<Message> out;
        out.emplace_back(Abort{step, reason, std::move(detail)});
        return out;
    }

    std::vector<Message> on(const SlotCommitments& m) {
        if (phase_ != Phase::AwaitCommitments || m.slot != next_slot_)
            return abort(current_step(), Status::AbortInvalidMessage, "commitments out of order");
        const auto N = static_cast<std::size_t>(params_.N);
        bit_commit_id_[m.slot] = m.ids[0];
        basis_commit_id_[m.slot] = m.ids[1];
        bit_commit_id_[N + m.slot] = m.ids[2];
        basis_commit_id_[N + m.slot] = m.ids[3];
        const Bit d = rng_.bit();
        challenges_.push_back(d);
        phase_ = Phase::AwaitOpenings;
        std::vector<Message> out;
        out.emplace_back(Challenge{m.slot, d});
        return out;
    }

    // Finds the opened bit and basis of `index` among `values`.
    std::optional<std::pair<const OpenedValue*, const OpenedValue*>> find_pair(const std::vector<OpenedValue>& values,
                                                                              std::size_t index) const {
        const OpenedValue* r = nullptr;
        const OpenedValue* b = nullptr;
        for (const auto& v : values) {
            if (v.id == bit_commit_id_[index]) r = &v;
            if (v.id == basis_commit_id_[index]) b = &v;
        }
        if (!r || !b) return std::nullopt;
        return std::make_pair(r, b);
    }

    std::vector<Message> on(const Openings& m) {
        if (phase_ == Phase::AwaitOpenings && m.step == 2) return on_challenge_openings(m);
        if (phase_ == Phase::AwaitRemovalOpenings && m.step == 4) return on_removal_openings(m);
        return abort(current_step(), Status::AbortInvalidMessage, "unveil out of order");
    }

    std::vector<Message> on_challenge_openings(const Openings& m) {
        const auto N = static_cast<std::size_t>(params_.N);
        const std::size_t slot = next_slot_;
        const Bit d = challenges_.back();
        const std::size_t index = N * d + slot;
        const auto pair = find_pair(m.values, index);
        if (m.values.size() != 2 || !pair)
            return abort(2, Status::AbortInvalidMessage, "unveil does not match challenge of slot " +
                                                             std::to_string(slot + 1));
        const auto [r, b] = *pair;
        if (r->verdict == commitment::Verdict::Rejected || b->verdict == commitment::Verdict::Rejected)
            return abort(2, Status::AbortCheatDetected, "commitment rejected at index " + std::to_string(index + 1));
        if (channel::basis_from_bit(b->value) == photon_bases_[index] && r->value != photon_bits_[index])
            return abort(2, Status::AbortCheatDetected, "matching basis but wrong bit at index " +
                                                            std::to_string(index + 1));
        survivor_.push_back(N * (1U - d) + slot);
        ++next_slot_;
        std::vector<Message> out;
        if (next_slot_ < N) {
            phase_ = Phase::AwaitCommitments;
            return out;
        }
        BasisAnnouncement ann;
        ann.bases.reserve(N);
        for (auto idx : survivor_) ann.bases.push_back(photon_bases_[idx]);
        removed_.assign(N, false);
        phase_ = params_.x > 0 ? Phase::AwaitRemoval : Phase::AwaitSubsets;
        out.emplace_back(std::move(ann));
        return out;
    }

    std::vector<Message> on(const RemovalAnnouncement& m) {
        if (phase_ != Phase::AwaitRemoval) return abort(current_step(), Status::AbortInvalidMessage, "removal out of order");
        if (static_cast<std::int64_t>(m.slots.size()) != params_.x)
            return abort(4, Status::AbortInvalidMessage, "removal must name exactly x=" + std::to_string(params_.x) +
                                                             " slots");
        for (auto slot : m.slots) {
            if (static_cast<std::int64_t>(slot) >= params_.N || removed_[slot])
                return abort(4, Status::AbortInvalidMessage, "invalid removal slot " + std::to_string(slot + 1));
            removed_[slot] = true;
        }
        removal_ = m.slots;
        phase_ = Phase::AwaitRemovalOpenings;
        return {};
    }

    std::vector<Message> on_removal_openings(const Openings& m) {
        if (m.values.size() != 2 * removal_.size())
            return abort(4, Status::AbortInvalidMessage, "removal unveil count mismatch");
        for (auto slot : removal_) {
            const std::size_t index = survivor_[slot];
            const auto pair = find_pair(m.values, index);
            if (!pair) return abort(4, Status::AbortInvalidMessage, "missing unveil for removed slot " +
                                                                        std::to_string(slot + 1));
            const auto [r, b] = *pair;
            if (r->verdict == commitment::Verdict::Rejected || b->verdict == commitment::Verdict::Rejected)
                return abort(4, Status::AbortCheatDetected, "commitment rejected at slot " + std::to_string(slot + 1));
            const bool basis_match = channel::basis_from_bit(b->value) == photon_bases_[index];
            if (params_.rate_case == RateCase::Low) {
                if (basis_match && r->value != photon_bits_[index])
                    return abort(4, Status::AbortCheatDetected, "matching basis but wrong bit at slot " +
                                                                    std::to_string(slot + 1));
                if (options_.strict_removal_check && !basis_match)
                    return abort(4, Status::AbortCheatDetected, "removed slot " + std::to_string(slot + 1) +
                                                                    " does not match");
            } else if (basis_match) {
                return abort(4, Status::AbortCheatDetected, "removed slot " + std::to_string(slot + 1) +
                                                                " claimed mismatched but matches");
            }
        }
        phase_ = Phase::AwaitSubsets;
        return {};
    }

    std::vector<Message> on(const SubsetAnnouncement& m) {
        if (phase_ != Phase::AwaitSubsets) return abort(current_step(), Status::AbortInvalidMessage, "subsets out of order");
        if (auto why = family_violation(m.family, params_, removed_); !why.empty())
            return abort(5, Status::AbortInvalidMessage, "illegal subset family: " + why);
        family_ = m.family;
        MaskedAnnouncement out_msg{mask_with(inputs_, m.family, [&](std::size_t slot) { return photon_bits_[survivor_[slot]]; })};
        phase_ = Phase::Done;
        status_ = Status::Completed;
        std::vector<Message> out;
        out.emplace_back(std::move(out_msg));
        return out;
    }

    std::vector<Message> on(const Abort& m) {
        phase_ = Phase::Aborted;
        status_ = m.reason;
        return {};
    }

    ProtocolParams params_;
    InputBits inputs_;
    RandomSource rng_;
    AliceOptions options_;
    Phase phase_ = Phase::Idle;
    Status status_ = Status::AbortInvalidMessage;

    std::vector<Bit> photon_bits_;
    std::vector<Basis> photon_bases_;
    std::vector<CommitmentId> bit_commit_id_;
    std::vector<CommitmentId> basis_commit_id_;
    std::vector<Bit> challenges_;
    std::size_t next_slot_ = 0;
    std::vector<std::size_t> survivor_;
    std::vector<bool> removed_;
    std::vector<std::size_t> removal_;
    std::optional<SubsetFamily> family_;
};

// ---------------------------------------------------------------------------
// Bob

class Bob {
  public:
    Bob(const ProtocolParams& params, ChoiceVector choices, RandomSource rng)
        : params_(params), choices_(std::move(choices)), rng_(rng) {}
    virtual ~Bob() = default;
    Bob(const Bob&) = delete;
    Bob& operator=(const Bob&) = delete;

    std::vector<Message> receive(Message& message, commitment::Ledger& ledger) {
        return std::visit(overloaded{
                              [&](PhotonTransmission& m) { return on(m, ledger); },
                              [&](const Challenge& m) { return on(m, ledger); },
                              [&](const BasisAnnouncement& m) { return on(m); },
                              [&](const MaskedAnnouncement& m) { return on(m); },
                              [&](const Abort& m) { return on(m); },
                              [&](const auto&) {
                                  return abort(0, Status::AbortInvalidMessage, "unexpected message for Bob");
                              },
                          },
                          message);
    }

    Status status() const noexcept { return status_; }
    bool finished() const noexcept { return phase_ == Phase::Done || phase_ == Phase::Aborted; }

    const ChoiceVector& choices() const noexcept { return choices_; }
    const std::vector<std::size_t>& survivors() const noexcept { return survivor_; }
    const std::optional<SubsetFamily>& family() const noexcept { return family_; }
    const std::vector<std::size_t>& output_labels() const noexcept { return output_labels_; }
    const std::map<std::size_t, Bit>& recovered() const noexcept { return recovered_; }
    std::optional<Basis> measured_in(std::size_t index) const { return measured_in_.at(index); }
    Bit committed_bit(std::size_t index) const { return committed_bit_.at(index); }
    Basis committed_basis(std::size_t index) const { return committed_basis_.at(index); }
    std::size_t forgeries() const noexcept { return forgeries_; }

  protected:
    enum class Phase { AwaitPhotons, AwaitChallenge, AwaitBases, AwaitMasked, Done, Aborted };

    // Hooks. The defaults are the honest protocol.

    // Step 1: measure every photon in a fresh random basis.
    virtual void measure_photons() {
        for (std::size_t i = 0; i < photons_.size(); ++i) measure_now(i, channel::basis_from_bit(rng_.bit()));
    }

    // Step 2: lodge the commitments to the measured bit and basis of `index`.
    virtual void commit_index(std::size_t index, commitment::Ledger& ledger) {
        bit_commit_[index] = ledger.commit(committed_bit_[index]);
        basis_commit_[index] = ledger.commit(channel::to_bit(committed_basis_[index]));
    }

    // Steps 2 and 4: open the commitments of `index`.
    virtual std::vector<OpenRequest> open_index(std::size_t index) {
        return {OpenRequest{bit_commit_[index].id, std::nullopt}, OpenRequest{basis_commit_[index].id, std::nullopt}};
    }

    // Step 3: react to the basis announcement.
    virtual void after_bases() {}

    // Step 4: slots to remove, nullopt when not enough eligible slots exist.
    virtual std::optional<std::vector<std::size_t>> choose_removal() {
        std::vector<std::size_t> eligible;
        const bool want_match = params_.rate_case == RateCase::Low;
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot)
            if (committed_match(slot) == want_match) eligible.push_back(slot);
        return draw_removal(std::move(eligible), static_cast<std::size_t>(params_.x), rng_);
    }

    // Step 5: announce a family; sets output_labels_. nullopt aborts.
    virtual std::optional<SubsetFamily> choose_subsets() {
        auto [good, rest] = split_by_reliability();
        output_labels_ = choices_.labels();
        return fill_family(std::move(good), std::move(rest), output_labels_, static_cast<std::size_t>(params_.n),
                           static_cast<std::size_t>(params_.subset_size), rng_);
    }

    // Helpers for strategies.

    void measure_now(std::size_t index, Basis basis) {
        const Bit r = channel::measure(photons_[index], basis, rng_);
        committed_bit_[index] = r;
        committed_basis_[index] = basis;
        known_bit_[index] = r;
        measured_in_[index] = basis;
    }

    // Committed basis equals Alice's announced basis.
    bool committed_match(std::size_t slot) const {
        return committed_basis_[survivor_[slot]] == alice_basis_[slot];
    }

    // Bob knows Alice's bit for this slot with certainty.
    bool reliable(std::size_t slot) const {
        const auto& in = measured_in_[survivor_[slot]];
        return in && *in == alice_basis_[slot];
    }

    // Non-removed slots split into (reliable, other), ascending.
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_reliability() const {
        std::vector<std::size_t> good;
        std::vector<std::size_t> rest;
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot) {
            if (removed_[slot]) continue;
            (reliable(slot) ? good : rest).push_back(slot);
        }
        return {std::move(good), std::move(rest)};
    }

    std::size_t N() const noexcept { return static_cast<std::size_t>(params_.N); }

    ProtocolParams params_;
    ChoiceVector choices_;
    RandomSource rng_;

    std::vector<channel::Photon> photons_;
    std::vector<Bit> committed_bit_;
    std::vector<Basis> committed_basis_;
    std::vector<Bit> known_bit_;
    std::vector<std::optional<Basis>> measured_in_;
    std::vector<commitment::CommitmentHandle> bit_commit_;
    std::vector<commitment::CommitmentHandle> basis_commit_;
    std::vector<std::size_t> survivor_;
    std::vector<Basis> alice_basis_;
    std::vector<bool> removed_;
    std::optional<SubsetFamily> family_;
    std::vector<std::size_t> output_labels_;
    std::map<std::size_t, Bit> recovered_;
    std::size_t forgeries_ = 0;

  private:
    std::vector<Message> abort(int step, Status reason, std::string detail) {
        phase_ = Phase::Aborted;
        status_ = reason;
        std::vector<Message> out;
        out.emplace_back(Abort{step, reason, std::move(detail)});
        return out;
    }

    SlotCommitments commit_slot(std::size_t slot, commitment::Ledger& ledger) {
        commit_index(slot, ledger);
        commit_index(N() + slot, ledger);
        return SlotCommitments{slot,
                               {bit_commit_[slot].id, basis_commit_[slot].id, bit_commit_[N() + slot].id,
                                basis_commit_[N() + slot].id}};
    }

    std::vector<Message> on(PhotonTransmission& m, commitment::Ledger& ledger) {
        if (phase_ != Phase::AwaitPhotons || m.photons.size() != 2 * N())
            return abort(1, Status::AbortInvalidMessage, "unexpected photon transmission");
        photons_ = std::move(m.photons);
        const std::size_t total = photons_.size();
        committed_bit_.assign(total, 0);
        committed_basis_.assign(total, Basis::Rectilinear);
        known_bit_.assign(total, 0);
        measured_in_.assign(total, std::nullopt);
        bit_commit_.assign(total, {});
        basis_commit_.assign(total, {});
        measure_photons();
        phase_ = Phase::AwaitChallenge;
        std::vector<Message> out;
        out.emplace_back(commit_slot(0, ledger));
        return out;
    }

    std::vector<Message> on(const Challenge& m, commitment::Ledger& ledger) {
        if (phase_ != Phase::AwaitChallenge || m.slot != survivor_.size() || m.d > 1)
            return abort(2, Status::AbortInvalidMessage, "challenge out of order");
        const std::size_t index = N() * m.d + m.slot;
        UnveilRequest req{2, open_index(index)};
        for (const auto& r : req.requests)
            if (r.forged) ++forgeries_;
        survivor_.push_back(N() * (1U - m.d) + m.slot);
        std::vector<Message> out;
        out.emplace_back(std::move(req));
        if (survivor_.size() < N()) {
            out.emplace_back(commit_slot(survivor_.size(), ledger));
        } else {
            phase_ = Phase::AwaitBases;
        }
        return out;
    }

    std::vector<Message> on(const BasisAnnouncement& m) {
        if (phase_ != Phase::AwaitBases || m.bases.size() != N())
            return abort(3, Status::AbortInvalidMessage, "unexpected basis announcement");
        alice_basis_ = m.bases;
        removed_.assign(N(), false);
        after_bases();

        std::vector<Message> out;
        auto removal = choose_removal();
        if (!removal) {
            phase_ = Phase::Aborted;
            status_ = Status::AbortInsufficientMatches;
            out.emplace_back(Abort{4, status_, "too few eligible slots for removal"});
            return out;
        }
        if (!removal->empty()) {
            UnveilRequest req{4, {}};
            for (auto slot : *removal) {
                removed_[slot] = true;
                for (auto& r : open_index(survivor_[slot])) {
                    if (r.forged) ++forgeries_;
                    req.requests.push_back(r);
                }
            }
            out.emplace_back(RemovalAnnouncement{*removal});
            out.emplace_back(std::move(req));
        }
        family_ = choose_subsets();
        if (!family_) {
            phase_ = Phase::Aborted;
            status_ = Status::AbortInsufficientMatches;
            out.emplace_back(Abort{5, status_, "too few matching slots for the chosen subsets"});
            return out;
        }
        out.emplace_back(SubsetAnnouncement{*family_});
        phase_ = Phase::AwaitMasked;
        return out;
    }

    std::vector<Message> on(const MaskedAnnouncement& m) {
        if (phase_ != Phase::AwaitMasked || m.masked.bits.size() != static_cast<std::size_t>(params_.n))
            return abort(6, Status::AbortInvalidMessage, "unexpected masked bits");
        for (auto label : output_labels_) {
            const Bit mask = subset_parity(family_->subsets[label],
                                           [&](std::size_t slot) { return known_bit_[survivor_[slot]]; });
            recovered_[label] = static_cast<Bit>(m.masked.bits[label] ^ mask);
        }
        phase_ = Phase::Done;
        status_ = Status::Completed;
        return {};
    }

    std::vector<Message> on(const Abort& m) {
        phase_ = Phase::Aborted;
        status_ = m.reason;
        return {};
    }

    Phase phase_ = Phase::AwaitPhotons;
    Status status_ = Status::AbortInvalidMessage;
};

// ---------------------------------------------------------------------------
// Session

struct SessionOptions {
    bool record_transcript = false;
    double channel_noise = 0.0;
    AliceOptions alice;
    // Weakness of the commitment scheme; needed only when Bob forges.
    std::optional<commitment::CheatModel> cheat;
};

class Session {
  public:
    Session(const ProtocolParams& params, Alice& alice, Bob& bob, std::uint64_t seed, std::uint64_t trial,
            SessionOptions options)
        : slots_(static_cast<std::size_t>(params.N)),
          alice_(alice),
          bob_(bob),
          ledger_rng_(seed, kLedgerStream, trial),
          channel_rng_(seed, kChannelStream, trial),
          options_(std::move(options)) {}

    void run() {
        std::deque<Envelope> queue;
        for (auto& m : alice_.start()) queue.push_back({Party::Alice, std::move(m)});
        while (!queue.empty()) {
            Envelope env = std::move(queue.front());
            queue.pop_front();
            if (env.from == Party::Bob) {
                if (auto* req = std::get_if<UnveilRequest>(&env.message)) env.message = resolve(*req);
            }
            if (auto* tx = std::get_if<PhotonTransmission>(&env.message); tx && options_.channel_noise > 0.0) {
                for (auto& photon : tx->photons) channel::apply_noise(photon, options_.channel_noise, channel_rng_);
            }
            if (options_.record_transcript) record(env);
            if (const auto* a = std::get_if<Abort>(&env.message)) {
                abort_ = *a;
                deliver(env);
                break;
            }
            auto replies = deliver(env);
            const Party sender = other(env.from);
            const bool aborting =
                std::any_of(replies.begin(), replies.end(), [](const Message& m) { return std::holds_alternative<Abort>(m); });
            if (aborting) queue.clear();
            for (auto& m : replies) {
                queue.push_back({sender, std::move(m)});
                if (std::holds_alternative<Abort>(queue.back().message)) break;
            }
        }
    }

    const Transcript& transcript() const noexcept { return transcript_; }
    const std::optional<Abort>& abort() const noexcept { return abort_; }
    Transcript take_transcript() { return std::move(transcript_); }
    commitment::Ledger& ledger() noexcept { return ledger_; }

  private:
    std::vector<Message> deliver(Envelope& env) {
        if (env.from == Party::Alice) return bob_.receive(env.message, ledger_);
        return alice_.receive(env.message);
    }

    Openings resolve(const UnveilRequest& req) {
        Openings out{req.step, {}};
        out.values.reserve(req.requests.size());
        for (const auto& r : req.requests) {
            const commitment::CommitmentHandle h{r.id};
            commitment::Opening o;
            if (r.forged) {
                if (!options_.cheat) throw commitment::CommitmentError("forged unveil without a cheat model");
                o = ledger_.cheat_unveil(h, *r.forged, *options_.cheat, ledger_rng_);
            } else {
                o = ledger_.unveil(h);
            }
            out.values.push_back(OpenedValue{r.id, o.value, o.verdict, o.forged});
        }
        return out;
    }

    void label(CommitmentId id, std::size_t index, Field field) {
        if (labels_.size() <= id) labels_.resize(id + 1);
        labels_[id] = {index, field};
    }

    void record(const Envelope& env) {
        const Party from = env.from;
        std::visit(overloaded{
                       [&](const PhotonTransmission& m) {
                           transcript_.add(1, from, "photons", Json{{"count", m.photons.size()}});
                       },
                       [&](const SlotCommitments& m) {
                           const std::array<std::pair<std::size_t, Field>, 4> what{
                               {{m.slot, Field::Bit}, {m.slot, Field::Basis}, {slots_ + m.slot, Field::Bit},
                                {slots_ + m.slot, Field::Basis}}};
                           for (std::size_t k = 0; k < 4; ++k) {
                               label(m.ids[k], what[k].first, what[k].second);
                               transcript_.add(2, from, "commit",
                                               Json{{"id", m.ids[k]},
                                                    {"index", what[k].first + 1},
                                                    {"field", to_string(what[k].second)}});
                           }
                       },
                       [&](const Challenge& m) {
                           transcript_.add(2, from, "challenge", Json{{"slot", m.slot + 1}, {"d", m.d}});
                       },
                       [&](const Openings& m) {
                           for (const auto& v : m.values) {
                               Json p{{"id", v.id}};
                               if (v.id < labels_.size()) {
                                   p["index"] = labels_[v.id].first + 1;
                                   p["field"] = to_string(labels_[v.id].second);
                               }
                               p["value"] = v.value;
                               p["verdict"] = commitment::to_string(v.verdict);
                               transcript_.add(m.step, from, v.forged ? "cheat_unveil" : "unveil", std::move(p));
                           }
                       },
                       [&](const BasisAnnouncement& m) {
                           transcript_.add(3, from, "bases", Json{{"bases", bases_string(m.bases)}});
                       },
                       [&](const RemovalAnnouncement& m) {
                           transcript_.add(4, from, "removal", Json{{"slots", one_based(m.slots)}});
                       },
                       [&](const SubsetAnnouncement& m) {
                           Json arr = Json::array();
                           for (const auto& s : m.family.subsets) arr.push_back(one_based(s));
                           transcript_.add(5, from, "subsets", Json{{"subsets", std::move(arr)}});
                       },
                       [&](const MaskedAnnouncement& m) {
                           transcript_.add(6, from, "masked", Json{{"bits", bits_string(m.masked.bits)}});
                       },
                       [&](const Abort& m) {
                           transcript_.add(m.step, from, "abort",
                                           Json{{"reason", to_string(m.reason)}, {"detail", m.detail}});
                       },
                       [&](const UnveilRequest&) {},
                   },
                   env.message);
    }

    std::size_t slots_;
    Alice& alice_;
    Bob& bob_;
    commitment::Ledger ledger_;
    RandomSource ledger_rng_;
    RandomSource channel_rng_;
    SessionOptions options_;
    Transcript transcript_;
    std::vector<std::pair<std::size_t, Field>> labels_;
    std::optional<Abort> abort_;
};

// ---------------------------------------------------------------------------
// One complete run

struct TrialOutcome {
    Status status = Status::AbortInvalidMessage;
    std::string detail;
    std::map<std::size_t, Bit> recovered;  // 0-based choice label -> bit, Completed only
    std::int64_t matches = -1;             // survivors whose committed basis equals Alice's, -1 before step 3
    std::optional<SubsetFamily> family;
    std::optional<Transcript> transcript;
};

// Ground-truth match count over the N surviving slots.
inline std::int64_t count_matches(const ProtocolParams& params, const Alice& alice, const Bob& bob) {
    if (static_cast<std::int64_t>(alice.survivors().size()) != params.N) return -1;
    std::int64_t matches = 0;
    for (auto idx : alice.survivors())
        if (bob.committed_basis(idx) == alice.basis(idx)) ++matches;
    return matches;
}

inline TrialOutcome collect_outcome(const ProtocolParams& params, const Alice& alice, const Bob& bob, Session& session,
                                    bool with_transcript) {
    TrialOutcome out;
    out.status = session.abort() ? session.abort()->reason : bob.status();
    if (out.status == Status::Completed) out.recovered = bob.recovered();
    out.matches = count_matches(params, alice, bob);
    out.family = alice.family();
    if (session.abort()) out.detail = session.abort()->detail;
    if (with_transcript) out.transcript = session.take_transcript();
    return out;
}

struct RunOptions {
    SessionOptions session;
    std::uint64_t trial = 0;
};

inline TrialOutcome run_protocol(const ProtocolParams& params, const InputBits& inputs, const ChoiceVector& choices,
                                 std::uint64_t seed, const RunOptions& options = {}) {
    Alice alice(params, inputs, RandomSource(seed, kAliceStream, options.trial), options.session.alice);
    Bob bob(params, choices, RandomSource(seed, kBobStream, options.trial));
    Session session(params, alice, bob, seed, options.trial, options.session);
    session.run();
    return collect_outcome(params, alice, bob, session, options.session.record_transcript);
}

}  // namespace qot::protocol
