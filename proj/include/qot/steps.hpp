// steps.hpp
// The protocol steps as free functions over omniscient IndexRecords.
//
// Each function consumes the same random streams, in the same order, as the
// corresponding party in a Session, so composing them reproduces an honest
// run draw for draw.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qot/protocol.hpp"

namespace qot::protocol {

// Step 1: Alice prepares 2N photons, Bob measures each in a random basis.
inline std::vector<IndexRecord> phase1_transmit(const ProtocolParams& params, RandomSource& rng_alice,
                                                RandomSource& rng_bob) {
    const auto total = static_cast<std::size_t>(2 * params.N);
    std::vector<IndexRecord> records(total);
    std::vector<channel::Photon> photons;
    photons.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        records[i].index = i;
        records[i].alice_bit = rng_alice.bit();
        records[i].alice_basis = channel::basis_from_bit(rng_alice.bit());
        photons.push_back(channel::encode(records[i].alice_bit, records[i].alice_basis));
    }
    for (std::size_t i = 0; i < total; ++i) {
        records[i].bob_basis = channel::basis_from_bit(rng_bob.bit());
        records[i].bob_bit = channel::measure(photons[i], records[i].bob_basis, rng_bob);
        records[i].match = records[i].bob_basis == records[i].alice_basis;
    }
    return records;
}

struct ChallengeResult {
    Status status = Status::Completed;
    std::string detail;
    std::vector<IndexRecord> survivors;  // slot i holds index i (d=1) or N+i (d=0)
    std::vector<Bit> challenges;
};

// Step 2: Bob commits to his bit and basis for both indices of each pair,
// Alice challenges one of them and checks that a matching basis implies a
// matching bit.
inline ChallengeResult phase2_challenge(std::vector<IndexRecord> records, RandomSource& rng_alice,
                                        commitment::Ledger& ledger) {
    ChallengeResult out;
    const std::size_t N = records.size() / 2;
    for (std::size_t slot = 0; slot < N; ++slot) {
        for (std::size_t idx : {slot, N + slot}) {
            records[idx].bit_commit = ledger.commit(records[idx].bob_bit);
            records[idx].basis_commit = ledger.commit(channel::to_bit(records[idx].bob_basis));
        }
        const Bit d = rng_alice.bit();
        out.challenges.push_back(d);
        const IndexRecord& opened = records[N * d + slot];
        const Bit r = ledger.unveil(opened.bit_commit).value;
        const Basis b = channel::basis_from_bit(ledger.unveil(opened.basis_commit).value);
        if (b == opened.alice_basis && r != opened.alice_bit) {
            out.status = Status::AbortCheatDetected;
            out.detail = "matching basis but wrong bit at index " + std::to_string(opened.index + 1);
            return out;
        }
        out.survivors.push_back(records[N * (1U - d) + slot]);
    }
    return out;
}

// Step 3: Alice's bases for slots 1..N.
inline std::vector<Basis> announce_bases(const std::vector<IndexRecord>& survivors) {
    std::vector<Basis> out;
    out.reserve(survivors.size());
    for (const auto& r : survivors) out.push_back(r.alice_basis);
    return out;
}

struct RemovalResult {
    Status status = Status::Completed;
    std::string detail;
    std::vector<std::size_t> removed;  // slots, ascending
};

// Step 4: Bob removes x uniformly chosen eligible slots (matching in the low
// case, mismatching in the high case) and Alice verifies the unveils.
inline RemovalResult removal_phase(std::vector<IndexRecord>& survivors, const ProtocolParams& params,
                                   RandomSource& rng_bob, bool strict_check = false) {
    RemovalResult out;
    const bool want_match = params.rate_case == RateCase::Low;
    std::vector<std::size_t> eligible;
    for (std::size_t slot = 0; slot < survivors.size(); ++slot)
        if (survivors[slot].match == want_match) eligible.push_back(slot);
    auto removal = draw_removal(std::move(eligible), static_cast<std::size_t>(params.x), rng_bob);
    if (!removal) {
        out.status = Status::AbortInsufficientMatches;
        out.detail = "too few eligible slots for removal";
        return out;
    }
    for (auto slot : *removal) {
        IndexRecord& r = survivors[slot];
        r.removed = true;
        const bool basis_match = r.bob_basis == r.alice_basis;
        bool rejected = false;
        if (params.rate_case == RateCase::Low) {
            rejected = (basis_match && r.bob_bit != r.alice_bit) || (strict_check && !basis_match);
        } else {
            rejected = basis_match;
        }
        if (rejected) {
            out.status = Status::AbortCheatDetected;
            out.detail = "removal check failed at slot " + std::to_string(slot + 1);
            return out;
        }
    }
    out.removed = std::move(*removal);
    return out;
}

// Step 5: a uniformly random legal family whose chosen subsets are all
// matching. nullopt when the surviving matches cannot fill them.
inline std::optional<SubsetFamily> select_subsets(const std::vector<IndexRecord>& survivors,
                                                  const ProtocolParams& params, const ChoiceVector& choices,
                                                  RandomSource& rng_bob) {
    std::vector<std::size_t> good;
    std::vector<std::size_t> rest;
    for (std::size_t slot = 0; slot < survivors.size(); ++slot) {
        if (survivors[slot].removed) continue;
        (survivors[slot].match ? good : rest).push_back(slot);
    }
    return fill_family(std::move(good), std::move(rest), choices.labels(), static_cast<std::size_t>(params.n),
                       static_cast<std::size_t>(params.subset_size), rng_bob);
}

// Step 6.
inline MaskedBits mask_bits(const InputBits& inputs, const SubsetFamily& family,
                            const std::vector<IndexRecord>& survivors) {
    return mask_with(inputs, family, [&](std::size_t slot) { return survivors[slot].alice_bit; });
}

// Step 7: each chosen bit is its masked bit xor the parity of Bob's measured
// bits over that subset.
inline std::map<std::size_t, Bit> decode(const MaskedBits& masked, const SubsetFamily& family,
                                         const std::vector<IndexRecord>& survivors, const ChoiceVector& choices) {
    std::map<std::size_t, Bit> out;
    for (auto label : choices.labels()) {
        const Bit mask = subset_parity(family.subsets[label], [&](std::size_t slot) { return survivors[slot].bob_bit; });
        out[label] = static_cast<Bit>(masked.bits[label] ^ mask);
    }
    return out;
}

}  // namespace qot::protocol
