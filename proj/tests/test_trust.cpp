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

#include "vanet/trust.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace vanet;

TEST(Keys, DeterministicPerSeed) {
  auto a = KeyPair::from_seed(5), b = KeyPair::from_seed(5), c = KeyPair::from_seed(6);
  EXPECT_EQ(a.public_key, b.public_key);
  EXPECT_NE(a.public_key, c.public_key);
  EXPECT_TRUE(a.consistent());
  auto broken = a;
  broken.public_key = c.public_key;
  EXPECT_FALSE(broken.consistent());
  EXPECT_THROW(sign_certificate("x", broken, "y", c.public_key), ValidationError);
}

TEST(Certificate, VerifiesAndDetectsTampering) {
  auto alice = KeyPair::from_seed(1), bob = KeyPair::from_seed(2);
  auto c = sign_certificate("alice", alice, "bob", bob.public_key);
  EXPECT_TRUE(c.verify());
  auto t = c;
  t.subject = "mallory";
  EXPECT_FALSE(t.verify());
  t = c;
  t.subject_public_key = KeyPair::from_seed(3).public_key;
  EXPECT_FALSE(t.verify());
  t = c;
  t.signature[0] ^= 1;
  EXPECT_FALSE(t.verify());
  // Self-signed must bind the signer's own key.
  auto self = sign_certificate("alice", alice, "alice", alice.public_key);
  EXPECT_TRUE(self.self_signed());
  EXPECT_TRUE(self.verify());
  auto lying = sign_certificate("alice", alice, "alice", bob.public_key);
  EXPECT_FALSE(lying.verify());
}

TEST(Certificate, WireRoundTrip) {
  auto a = KeyPair::from_seed(1), b = KeyPair::from_seed(2);
  auto c = sign_certificate("a", a, "b", b.public_key);
  ByteWriter w;
  c.encode(w);
  ByteReader r(w.bytes());
  EXPECT_EQ(Certificate::decode(r), c);
}

TEST(Repository, KeepsOnePerPairAndRejectsForgeries) {
  auto a = KeyPair::from_seed(1), b = KeyPair::from_seed(2), c = KeyPair::from_seed(3);
  CertificateRepository repo("b");
  EXPECT_TRUE(repo.add(sign_certificate("a", a, "b", b.public_key)));
  EXPECT_FALSE(repo.add(sign_certificate("a", a, "b", b.public_key)));
  auto forged = sign_certificate("c", c, "b", b.public_key);
  forged.signer = "a";
  EXPECT_FALSE(repo.add(forged));
  EXPECT_TRUE(repo.add(sign_certificate("c", c, "b", b.public_key)));
  EXPECT_EQ(repo.trust_weight("b"), 2u);
  for (const auto &cert : repo.certificates()) EXPECT_EQ(cert.trust_weight, 2u);
  ASSERT_NE(repo.find("b", "c"), nullptr);
  EXPECT_EQ(repo.find("b", "z"), nullptr);
  auto friends = repo.friend_keys();
  EXPECT_EQ(friends.size(), 2u);
  EXPECT_EQ(friends.at("a"), a.public_key);
}

TEST(Repository, InsertionOrderDoesNotMatter) {
  std::vector<Certificate> certs;
  for (int i = 0; i < 8; ++i) {
    auto k = KeyPair::from_seed(100 + i);
    certs.push_back(sign_certificate("s" + std::to_string(i), k, "owner", KeyPair::from_seed(1).public_key));
  }
  auto rng = Rng::derive(1, "order");
  CertificateRepository first("owner");
  for (const auto &c : certs) first.add(c);
  for (int round = 0; round < 10; ++round) {
    rng.shuffle(certs);
    CertificateRepository again("owner");
    for (const auto &c : certs) again.add(c);
    EXPECT_EQ(again.certificates(), first.certificates());
  }
}

TEST(Roster, RegistersUsersWithSelfCertificates) {
  Roster roster;
  const auto &u = roster.register_user("alice", 1);
  ASSERT_NE(u.repository.self_certificate(), nullptr);
  EXPECT_TRUE(u.repository.self_certificate()->verify());
  EXPECT_THROW(roster.register_user("alice", 2), ValidationError);
  EXPECT_THROW(roster.register_user("bob", 1), ValidationError);  // same seed, same key
  EXPECT_THROW(roster.register_user("has space", 3), ValidationError);
  EXPECT_THROW(roster.register_user("", 4), ValidationError);
  EXPECT_THROW(roster.user("nobody"), ValidationError);
  roster.register_user("bob", 2);
  EXPECT_THROW(sign_friend(roster, "bob", "bob"), ValidationError);
}

TEST(Roster, LoaderBuildsMutualFriendships) {
  auto roster = parse_roster("user a 1\nuser b 2\nuser c 3\nfriend a b\n# comment\nfriend b c\n");
  EXPECT_EQ(roster.size(), 3u);
  EXPECT_EQ(roster.user("b").repository.friend_keys().size(), 2u);
  EXPECT_EQ(common_friends(roster.user("a").repository, roster.user("c").repository), (std::set<UserId>{"b"}));
  EXPECT_TRUE(common_friends(roster.user("a").repository, roster.user("b").repository).empty());
  auto graph = TrustGraph::from_certificates(roster.all_certificates());
  EXPECT_TRUE(graph.has_edge("a", "b"));
  EXPECT_TRUE(graph.has_edge("b", "a"));
  EXPECT_FALSE(graph.has_edge("a", "c"));
  EXPECT_EQ(graph.self_loops(), 3u);

  EXPECT_THROW(parse_roster("user a\n"), ParseError);
  EXPECT_THROW(parse_roster("user a 1\nfriend a z\n"), ValidationError);
  EXPECT_THROW(parse_roster("enemy a b\n"), ParseError);
}

TEST(Roster, CommonFriendsMatchSetIntersection) {
  auto rng = Rng::derive(2, "common");
  for (int round = 0; round < 15; ++round) {
    const int n = 6 + static_cast<int>(rng.below(10));
    std::ostringstream doc;
    for (int i = 0; i < n; ++i) doc << "user u" << i << ' ' << round * 100 + i + 1 << '\n';
    std::vector<std::set<int>> adj(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.below(4) == 0) {
          doc << "friend u" << i << " u" << j << '\n';
          adj[i].insert(j);
          adj[j].insert(i);
        }
    auto roster = parse_roster(doc.str());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        std::set<UserId> want;
        for (int k : adj[a])
          if (adj[b].count(k)) want.insert("u" + std::to_string(k));
        auto ra = roster.user("u" + std::to_string(a)).repository;
        auto rb = roster.user("u" + std::to_string(b)).repository;
        EXPECT_EQ(common_friends(ra, rb), want);
      }
  }
}

TEST(Roster, CertificateDumpFormat) {
  auto roster = parse_roster("user a 1\nuser b 2\nfriend a b\n");
  std::ostringstream out;
  dump_certificates(out, roster.user("b").repository.certificates());
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    std::istringstream f(line);
    std::string kw, subject, signer, hex;
    f >> kw >> subject >> signer >> hex;
    EXPECT_EQ(kw, "cert");
    EXPECT_EQ(hex.size(), 128u);
  }
  EXPECT_EQ(lines, 3);  // a->b, b->a, b->b
}

TEST(Revocation, ThresholdAndMonotoneMerge) {
  RevocationStore s(3);
  s.report("m");
  s.report("m");
  EXPECT_FALSE(s.is_revoked("m"));
  s.report("m");
  EXPECT_TRUE(s.is_revoked("m"));
  EXPECT_EQ(s.record("m")->misbehavior_count, 3u);
  EXPECT_FALSE(s.record("x"));

  Roster roster;
  roster.register_user("m", 1);
  EXPECT_THROW(report_misbehavior(roster, s, "ghost"), ValidationError);
  EXPECT_EQ(report_misbehavior(roster, s, "m").misbehavior_count, 4u);
}

TEST(Revocation, MergeIsCommutativeIdempotentAndMonotone) {
  auto rng = Rng::derive(3, "merge");
  auto random_store = [&] {
    RevocationStore s(3);
    for (int i = 0; i < 12; ++i) s.report("u" + std::to_string(rng.below(6)));
    return s;
  };
  for (int round = 0; round < 100; ++round) {
    auto a = random_store(), b = random_store();
    auto ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    EXPECT_EQ(ab.records(), ba.records());
    auto twice = ab;
    twice.merge(b);
    EXPECT_EQ(twice.records(), ab.records());
    for (const auto &[id, rec] : a.records()) {
      EXPECT_GE(ab.record(id)->misbehavior_count, rec.misbehavior_count);
      if (rec.revoked) EXPECT_TRUE(ab.is_revoked(id));
    }
    auto x = a, y = b;
    exchange_revocations(x, y);
    EXPECT_EQ(x.records(), ab.records());
    EXPECT_EQ(y.records(), ab.records());
  }
}

TEST(Revocation, EncodeDecode) {
  RevocationStore s;
  s.report("a");
  for (int i = 0; i < 3; ++i) s.report("b");
  ByteWriter w;
  s.encode(w);
  ByteReader r(w.bytes());
  EXPECT_EQ(RevocationStore::decode(r), s.records());
}
