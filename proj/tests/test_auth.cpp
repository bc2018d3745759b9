//------------------------------------------------------------------------------
//
//   Copyright 2026 The vanet-sim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "vanet/auth.hpp"

#include <gtest/gtest.h>

using namespace vanet;

namespace {

struct World {
  Roster roster = parse_roster(
      "user alice 1\nuser bob 2\nuser carol 3\nuser dave 4\nuser erin 5\n"
      "friend alice carol\nfriend bob carol\nfriend dave erin\n");
  RevocationStore alice_store, bob_store, dave_store;
  Rng rng = Rng::derive(7, "auth-test");

  AuthParty party(const std::string &who, RevocationStore &store) {
    return AuthParty::from_user(roster.user(who), store, rng.bytes(kPseudonymSize));
  }
};

Bytes all_bytes(const AuthTranscript &t) {
  Bytes out;
  auto add = [&](const Bytes &b) { out.insert(out.end(), b.begin(), b.end()); };
  for (const auto *list : {&t.initiator_commitments, &t.responder_commitments, &t.initiator_responses, &t.responder_responses})
    for (const auto &b : *list) add(b);
  add(t.challenge_to_initiator);
  add(t.challenge_to_responder);
  add(t.initiator_pseudonym);
  add(t.responder_pseudonym);
  return out;
}

bool contains(const Bytes &hay, const Bytes &needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

TEST(Auth, CommonFriendAuthenticates) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto out = zk_mutual_authenticate(a, b, w.rng, 10.0, &w.alice_store, &w.bob_store);
  ASSERT_TRUE(out.accepted);
  EXPECT_EQ(out.messages, 5u);
  ASSERT_TRUE(out.initiator_key && out.responder_key);
  EXPECT_EQ(out.initiator_key->key, out.responder_key->key);
  EXPECT_EQ(out.initiator_key->peer_pseudonym, b.pseudonym);
  EXPECT_EQ(out.responder_key->peer_pseudonym, a.pseudonym);
  EXPECT_EQ(out.initiator_view_of_responder->user, "bob");
  EXPECT_EQ(out.responder_view_of_initiator->public_key, w.roster.user("alice").keys.public_key);
}

TEST(Auth, NoCommonFriendIsRejected) {
  World w;
  auto a = w.party("alice", w.alice_store), d = w.party("dave", w.dave_store);
  auto out = zk_mutual_authenticate(a, d, w.rng, 0.0);
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.responder_failure, AuthFailure::no_common_friend);
  EXPECT_FALSE(out.initiator_key);
  // Direct friends with nobody in common do not authenticate either.
  auto c = w.party("carol", w.alice_store);
  EXPECT_FALSE(zk_mutual_authenticate(a, c, w.rng, 0.0).accepted);
}

TEST(Auth, RevokedPeerIsRejectedEitherWay) {
  World w;
  for (int i = 0; i < 3; ++i) w.alice_store.report("bob");
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto out = zk_mutual_authenticate(a, b, w.rng, 0.0);
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.initiator_failure, AuthFailure::revoked);
  auto back = zk_mutual_authenticate(b, a, w.rng, 0.0);
  EXPECT_FALSE(back.accepted);
  EXPECT_EQ(back.responder_failure, AuthFailure::revoked);
}

TEST(Auth, RevocationsSpreadOnSuccess) {
  World w;
  w.alice_store.report("erin");
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto out = zk_mutual_authenticate(a, b, w.rng, 0.0, &w.alice_store, &w.bob_store);
  ASSERT_TRUE(out.accepted);
  EXPECT_EQ(w.bob_store.record("erin")->misbehavior_count, 1u);
  EXPECT_EQ(out.responder_view_of_initiator->revocations.count("erin"), 1u);
}

TEST(Auth, TranscriptRevealsNoFriendKeys) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto out = zk_mutual_authenticate(a, b, w.rng, 0.0);
  ASSERT_TRUE(out.accepted);
  auto bytes = all_bytes(out.transcript);
  for (const auto &u : w.roster.users()) {
    EXPECT_FALSE(contains(bytes, u.keys.public_key)) << u.id;
    EXPECT_FALSE(contains(bytes, to_bytes(u.id))) << u.id;
  }
  // Padded: the list length says nothing about how many friends there are.
  EXPECT_EQ(out.transcript.initiator_commitments.size(), kMinCommitmentSlots);
  EXPECT_EQ(out.transcript.responder_commitments.size(), kMinCommitmentSlots);
  EXPECT_EQ(out.transcript.challenge_to_initiator.size(), kChallengeSize);
}

TEST(Auth, CommitmentSlotsPadToPowerOfTwo) {
  EXPECT_EQ(detail::commitment_slots(0), 64u);
  EXPECT_EQ(detail::commitment_slots(64), 64u);
  EXPECT_EQ(detail::commitment_slots(65), 128u);
  EXPECT_EQ(detail::commitment_slots(300), 512u);
}

TEST(Auth, FreshRandomnessEveryRun) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto x = zk_mutual_authenticate(a, b, w.rng, 0.0), y = zk_mutual_authenticate(a, b, w.rng, 0.0);
  ASSERT_TRUE(x.accepted && y.accepted);
  EXPECT_NE(x.initiator_key->key, y.initiator_key->key);
  EXPECT_NE(x.transcript.challenge_to_initiator, y.transcript.challenge_to_initiator);
  EXPECT_NE(x.transcript.initiator_commitments, y.transcript.initiator_commitments);
}

TEST(Auth, LeavingRangeTimesOut) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  int polls = 0;
  auto out = zk_mutual_authenticate(a, b, w.rng, 0.0, nullptr, nullptr, [&] { return ++polls < 3; });
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.initiator_failure, AuthFailure::timeout);
  EXPECT_EQ(out.responder_failure, AuthFailure::timeout);
}

TEST(Auth, ReplayedResponseFailsAgainstFreshChallenge) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  // Record one honest run message by message.
  auto ia = AuthEngine::initiator(77);
  auto rb = AuthEngine::responder(77);
  std::vector<AuthMessage> seen;
  std::optional<AuthMessage> m = ia.start(a, b.pseudonym, w.rng, 0.0);
  bool to_b = true;
  while (m) {
    seen.push_back(*m);
    m = to_b ? rb.on_message(*m, b, w.rng, 0.0) : ia.on_message(*m, a, w.rng, 0.0);
    to_b = !to_b;
  }
  ASSERT_EQ(ia.status(), AuthStatus::accepted);
  for (int i = 0; i < 200; ++i) {
    auto victim = AuthEngine::responder(77);
    auto challenge = victim.on_message(seen[0], b, w.rng, 1.0);
    ASSERT_TRUE(challenge);
    auto reply = victim.on_message(seen[2], b, w.rng, 1.0);
    ASSERT_TRUE(reply);
    EXPECT_EQ(reply->tag, MessageTag::auth_result);
    EXPECT_EQ(victim.status(), AuthStatus::rejected);
    EXPECT_EQ(victim.failure(), AuthFailure::bad_response);
  }
}

TEST(Auth, OutOfOrderMessagesAreProtocolErrors) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto rb = AuthEngine::responder(5);
  AuthMessage result;
  result.tag = MessageTag::auth_response;
  result.session = 5;
  result.identity = EncryptedPayload{Bytes(8), Bytes(12), {}, Bytes(16)};
  auto r = rb.on_message(result, b, w.rng, 0.0);
  ASSERT_TRUE(r);
  EXPECT_EQ(rb.failure(), AuthFailure::protocol);
  // Wrong session id is ignored outright.
  auto ia = AuthEngine::initiator(9);
  auto commit = ia.start(a, b.pseudonym, w.rng, 0.0);
  auto other = AuthEngine::responder(10);
  EXPECT_FALSE(other.on_message(commit, b, w.rng, 0.0));
  EXPECT_EQ(other.status(), AuthStatus::pending);
  EXPECT_THROW(ia.start(a, b.pseudonym, w.rng, 0.0), std::logic_error);
}

TEST(Auth, MessagesSurviveTheWire) {
  World w;
  auto a = w.party("alice", w.alice_store), b = w.party("bob", w.bob_store);
  auto ia = AuthEngine::initiator(3);
  auto rb = AuthEngine::responder(3);
  std::optional<AuthMessage> m = ia.start(a, b.pseudonym, w.rng, 0.0);
  bool to_b = true;
  while (m) {
    auto decoded = AuthMessage::decode(unframe(m->encode()));
    EXPECT_EQ(decoded.encode(), m->encode());
    m = to_b ? rb.on_message(decoded, b, w.rng, 0.0) : ia.on_message(decoded, a, w.rng, 0.0);
    to_b = !to_b;
  }
  EXPECT_EQ(rb.status(), AuthStatus::accepted);
  EXPECT_THROW(AuthMessage::decode(Frame{MessageTag::beacon, Bytes(8)}), WireError);
  EXPECT_THROW(AuthMessage::decode(Frame{MessageTag::auth_result, Bytes(3)}), WireError);
}

TEST(Pseudonym, RotationNotifiesOnlyAuthenticatedPeers) {
  auto rng = Rng::derive(1, "rotate");
  auto current = fresh_pseudonym(rng, 0.0);
  auto k1 = rng.bytes(32), k2 = rng.bytes(32), outsider = rng.bytes(32);
  std::vector<PeerSessionRef> peers{{4, k1}, {9, k2}};
  auto r = rotate_pseudonym(current, peers, 100.0, rng);
  ASSERT_EQ(r.notices.size(), 2u);
  EXPECT_NE(r.next.value, current.value);
  EXPECT_GE(r.next.valid_until, 100.0 + 120.0);
  EXPECT_LE(r.next.valid_until, 100.0 + 600.0);
  auto link = open_change_notice(k1, r.notices[0].sealed);
  EXPECT_EQ(link.old_value, current.value);
  EXPECT_EQ(link.new_value, r.next.value);
  EXPECT_EQ(r.notices[1].peer, 9u);
  EXPECT_THROW(open_change_notice(k2, r.notices[0].sealed), CipherError);
  EXPECT_THROW(open_change_notice(outsider, r.notices[1].sealed), CipherError);
  EXPECT_TRUE(rotate_pseudonym(current, {}, 1.0, rng).notices.empty());
}

TEST(Pseudonym, LifetimesStayInPolicy) {
  auto rng = Rng::derive(2, "life");
  PseudonymPolicy p{30, 40};
  for (int i = 0; i < 500; ++i) {
    auto ps = fresh_pseudonym(rng, 5.0, p);
    ASSERT_EQ(ps.value.size(), kPseudonymSize);
    ASSERT_GE(ps.valid_until, 35.0);
    ASSERT_LE(ps.valid_until, 45.0);
  }
}

TEST(Beacon, CarriesOnlyPseudonymSequenceAndTime) {
  auto rng = Rng::derive(3, "beacon");
  BeaconState s{fresh_pseudonym(rng, 0.0), 0};
  auto b0 = emit_beacon(s, 12.7), b1 = emit_beacon(s, 13.2);
  EXPECT_EQ(b0.sequence, 0u);
  EXPECT_EQ(b1.sequence, 1u);
  EXPECT_EQ(b0.timestamp, 12u);
  auto wire = b1.encode();
  EXPECT_EQ(wire.size(), 1 + 4 + kPseudonymSize + 8);
  auto back = Beacon::decode(unframe(wire).payload);
  EXPECT_EQ(back.sender_pseudonym, s.pseudonym.value);
  EXPECT_EQ(back.sequence, 1u);
  EXPECT_EQ(back.timestamp, 13u);
  EXPECT_THROW(Beacon::decode(Bytes(5)), WireError);
}

TEST(Scheduler, RateLimitsPerPseudonym) {
  AuthScheduler s(20);
  Bytes p1(16, 1), p2(16, 2);
  EXPECT_EQ(s.due({p1, p2}, {p2}, 0.0), std::vector<Bytes>{p1});
  EXPECT_TRUE(s.due({p1}, {}, 19.0).empty());
  EXPECT_EQ(s.due({p1}, {}, 20.0), std::vector<Bytes>{p1});
  s.forget_older_than(100.0);
  EXPECT_EQ(s.due({p1}, {}, 21.0), std::vector<Bytes>{p1});
}

TEST(Journey, CountsDistinctUsers) {
  JourneyContactLog log;
  EXPECT_FALSE(log.first_auth_at());
  log.record("a", 30.0);
  log.record("a", 90.0);  // same user under a new pseudonym
  log.record("b", 95.0);
  EXPECT_EQ(log.distinct_peers(), 2u);
  EXPECT_EQ(*log.first_auth_at(), 30.0);
  log.reset();
  EXPECT_EQ(log.distinct_peers(), 0u);
  EXPECT_FALSE(log.first_auth_at());
}
