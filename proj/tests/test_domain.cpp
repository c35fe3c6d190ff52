#include <atomic>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/domain/run_state.hpp"
#include "tirtha/domain/store.hpp"

using namespace tirtha;

namespace {

SiteInput somanatha() {
  SiteInput in;
  in.name = "Somanatha Temple";
  in.locality = "Khurdha";
  in.state = "Odisha";
  in.country = "India";
  return in;
}

ImageBlob blob(int i) {
  return ImageBlob{"/tmp/img" + std::to_string(i) + ".jpg", 1000, 1440, 1080, true, "hash" + std::to_string(i)};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Integrity;
}

}  // namespace

TEST(Sites, VerboseIdFromNameAndLocation) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  EXPECT_EQ(s.verbose_id.rfind("somanatha_temple_khurdha_", 0), 0u) << s.verbose_id;
  EXPECT_EQ(s.verbose_id, "somanatha_temple_khurdha_odisha_india");
  EXPECT_DOUBLE_EQ(s.recon_options.simplification_factor, 0.3);
  EXPECT_EQ(s.status, SiteStatus::Live);
  EXPECT_FALSE(s.completed);
}

TEST(Sites, DuplicateMetadataGetsSuffix) {
  Store store(":memory:");
  SiteRecord a = store.create_site(somanatha(), {}, 1);
  SiteRecord b = store.create_site(somanatha(), {}, 2);
  SiteRecord c = store.create_site(somanatha(), {}, 3);
  EXPECT_EQ(b.verbose_id, a.verbose_id + "_2");
  EXPECT_EQ(c.verbose_id, a.verbose_id + "_3");
}

TEST(Sites, AsciiFoldingAndSeparators) {
  SiteInput in;
  in.name = "Kōṇārka  Sun-Temple";
  in.locality = "Purī";
  EXPECT_EQ(make_verbose_id_base(in), "konarka_sun_temple_puri");
}

TEST(Sites, ValidationErrors) {
  Store store(":memory:");
  SiteInput empty = somanatha();
  empty.name = "  ";
  EXPECT_EQ(code_of([&] { store.create_site(empty, {}, 1); }), ErrorCode::Validation);
  SiteInput nowhere;
  nowhere.name = "Temple";
  EXPECT_EQ(code_of([&] { store.create_site(nowhere, {}, 1); }), ErrorCode::Validation);
  ReconOptions bad;
  bad.texture_side = 3000;
  EXPECT_EQ(code_of([&] { store.create_site(somanatha(), bad, 1); }), ErrorCode::Validation);
  bad = {};
  bad.simplification_factor = 0.0;
  EXPECT_EQ(code_of([&] { store.create_site(somanatha(), bad, 1); }), ErrorCode::Validation);
  bad = {};
  bad.min_observation_angle = 90;
  EXPECT_EQ(code_of([&] { store.create_site(somanatha(), bad, 1); }), ErrorCode::Validation);
}

TEST(Sites, SearchIsCaseInsensitiveAndOrdered) {
  Store store(":memory:");
  store.create_site(somanatha(), {}, 1);
  SiteInput other;
  other.name = "Bhaskareswara Temple";
  other.locality = "Bhubaneswar";
  store.create_site(other, {}, 2);
  auto lower = store.search_sites("somanatha");
  auto upper = store.search_sites("SOMANATHA");
  ASSERT_EQ(lower.size(), 1u);
  ASSERT_EQ(upper.size(), 1u);
  EXPECT_EQ(lower[0].id, upper[0].id);
  EXPECT_TRUE(store.search_sites("zzz-no-match").empty());
  auto all = store.search_sites("");
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].name, "Bhaskareswara Temple");
  EXPECT_EQ(store.search_sites("50%").size(), 0u);
}

TEST(Sites, StatusTransitions) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  EXPECT_EQ(code_of([&] { store.set_site_status(s.id, SiteStatus::Error, 2); }), ErrorCode::IllegalTransition);
  store.set_site_status(s.id, SiteStatus::Processing, 2);
  store.set_site_status(s.id, SiteStatus::Error, 3);
  store.set_site_status(s.id, SiteStatus::Processing, 4);
  EXPECT_EQ(store.set_site_status(s.id, SiteStatus::Live, 5).status, SiteStatus::Live);
}

TEST(Contributions, RecordsPendingImagesAndJobs) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  ContributorRecord who = store.upsert_contributor("a@example.org", "A");
  std::vector<ImageBlob> blobs;
  for (int i = 0; i < 20; ++i) blobs.push_back(blob(i));
  ContributionRecord c = store.record_contribution(s.id, who.id, blobs, 10);
  ASSERT_EQ(c.image_ids.size(), 20u);
  EXPECT_TRUE(c.upload_complete);
  for (auto id : c.image_ids) {
    ImageRecord img = store.get_image(id);
    EXPECT_EQ(img.safety, SafetyState::Pending);
    EXPECT_EQ(img.label, ImageLabel::Unlabeled);
  }
  EXPECT_EQ(store.queue_depth(), 20u);
}

TEST(Contributions, ErrorContracts) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  ContributorRecord who = store.upsert_contributor("a@example.org", "A");
  std::vector<ImageBlob> none;
  EXPECT_EQ(code_of([&] { store.record_contribution(s.id, who.id, none, 2); }), ErrorCode::EmptyContribution);
  std::vector<ImageBlob> one = {blob(1)};
  store.ban_contributor(who.id, "spam");
  EXPECT_EQ(code_of([&] { store.record_contribution(s.id, who.id, one, 3); }), ErrorCode::ContributorBanned);
  ContributorRecord ok = store.upsert_contributor("b@example.org", "B");
  store.complete_site(s.id, 4);
  EXPECT_EQ(code_of([&] { store.record_contribution(s.id, ok.id, one, 5); }), ErrorCode::SiteCompleted);
  EXPECT_EQ(code_of([&] { store.complete_site(s.id, 6); }), ErrorCode::Conflict);
  EXPECT_TRUE(store.contributions_for_site(s.id).empty());
}

TEST(Contributions, ContributorStoresOnlyEmailAndName) {
  Store store(":memory:");
  ContributorRecord a = store.upsert_contributor("a@example.org", "A");
  ContributorRecord again = store.upsert_contributor("a@example.org", "A. Person");
  EXPECT_EQ(a.id, again.id);
  EXPECT_EQ(again.name, "A. Person");
  nlohmann::json snapshot = store.export_json();
  for (const auto& row : snapshot["contributors"]) {
    for (const auto& [key, value] : row.items()) {
      EXPECT_TRUE(key == "id" || key == "email" || key == "name" || key == "banned" || key == "ban_reason") << key;
    }
  }
}

// Timestamps are sampled before the write lock, so they do not order commits.
// The check is on commit order: once complete_site has returned, the set of
// contributions is frozen.
TEST(Contributions, CompletionRaceNeverAdmitsLateContribution) {
  fixture::TempDir dir;
  Store store(dir.path() / "race.db");
  for (int trial = 0; trial < 10; ++trial) {
    SiteInput in = somanatha();
    in.name += " " + std::to_string(trial);
    SiteRecord s = store.create_site(in, {}, 1);
    ContributorRecord who = store.upsert_contributor("c@example.org", "C");
    std::atomic<Timestamp> clock{100};
    std::atomic<int> accepted{0}, rejected{0};
    std::size_t frozen = 0;
    std::thread completer([&] {
      std::this_thread::sleep_for(std::chrono::microseconds(200 * trial));
      store.complete_site(s.id, clock.fetch_add(1));
      frozen = store.contributions_for_site(s.id).size();
    });
    std::vector<std::thread> contributors;
    for (int k = 0; k < 4; ++k) {
      contributors.emplace_back([&, k] {
        for (int j = 0; j < 10; ++j) {
          try {
            std::vector<ImageBlob> one = {blob(trial * 1000 + k * 100 + j)};
            store.record_contribution(s.id, who.id, one, clock.fetch_add(1));
            ++accepted;
          } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::SiteCompleted);
            ++rejected;
          }
        }
      });
    }
    completer.join();
    for (auto& t : contributors) t.join();
    EXPECT_EQ(accepted + rejected, 40);
    EXPECT_EQ(store.contributions_for_site(s.id).size(), frozen) << "trial " << trial;
    EXPECT_EQ(static_cast<int>(frozen), accepted.load());
  }
}

TEST(Images, GoodRequiresSafe) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  ContributorRecord who = store.upsert_contributor("a@example.org", "A");
  std::vector<ImageBlob> one = {blob(1)};
  ImageId id = store.record_contribution(s.id, who.id, one, 2).image_ids[0];
  EXPECT_EQ(code_of([&] { store.set_image_assessment(id, ImageLabel::Good, {}); }), ErrorCode::Validation);
  store.set_image_safety(id, SafetyState::Safe);
  store.set_image_assessment(id, ImageLabel::Good, {120, 20, 0.7, {}});
  EXPECT_EQ(store.get_image(id).label, ImageLabel::Good);
  // a label does not survive leaving SAFE
  store.set_image_safety(id, SafetyState::Moderation);
  EXPECT_EQ(store.get_image(id).label, ImageLabel::Unlabeled);
  EXPECT_EQ(store.moderation_queue().size(), 1u);
}

TEST(Images, PruneRemovesOnlyStaleUnfinishedUploads) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  ContributorRecord who = store.upsert_contributor("a@example.org", "A");
  ContributionId open = store.open_contribution(s.id, who.id, 10);
  store.attach_image(open, blob(1), 10);
  std::vector<ImageBlob> done = {blob(2)};
  store.record_contribution(s.id, who.id, done, 10);
  EXPECT_TRUE(store.prune_stale_pending(5).empty());
  auto removed = store.prune_stale_pending(11);
  ASSERT_EQ(removed.size(), 1u);
  EXPECT_EQ(removed[0], "/tmp/img1.jpg");
  EXPECT_EQ(store.images_for_site(s.id).size(), 1u);
  EXPECT_FALSE(store.find_contribution(open).has_value());
}

TEST(RunStateMachine, Examples) {
  EXPECT_EQ(next_run_state(RunState::Queued, RunEvent::StartPreprocess), RunState::Preprocessing);
  EXPECT_FALSE(next_run_state(RunState::Published, RunEvent::StartReconstruct).has_value());
  EXPECT_EQ(next_run_state(RunState::Reconstructing, RunEvent::Fail), RunState::Failed);
  EXPECT_EQ(next_run_state(RunState::Failed, RunEvent::Archive), RunState::Archived);
  EXPECT_FALSE(next_run_state(RunState::Archived, RunEvent::Fail).has_value());
}

TEST(RunStateMachine, RandomEventSequencesFollowTheGraph) {
  Store store(":memory:");
  std::mt19937_64 rng(3);
  const RunEvent events[] = {RunEvent::StartPreprocess, RunEvent::StartReconstruct, RunEvent::StartPostprocess,
                             RunEvent::Fail, RunEvent::Archive};
  for (int trial = 0; trial < 40; ++trial) {
    SiteInput in = somanatha();
    in.name += std::to_string(trial);
    SiteRecord s = store.create_site(in, {}, 1);
    RunRecord run = store.create_run(s.id, 1);
    for (int step = 0; step < 8; ++step) {
      RunEvent e = events[rng() % 5];
      auto expected = next_run_state(run.state, e);
      try {
        run = store.transition_run(run.id, e, "m", 2 + step);
        ASSERT_TRUE(expected.has_value());
        EXPECT_EQ(run.state, *expected);
      } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::IllegalTransition);
        EXPECT_FALSE(expected.has_value());
      }
    }
    RunState prev = RunState::Queued;
    for (const auto& entry : store.get_run(run.id).stage_log) {
      if (entry.kind != StageEntryKind::Transition) continue;
      RunState next = parse_run_state(entry.name);
      EXPECT_TRUE(is_legal_step(prev, next)) << to_string(prev) << " -> " << entry.name;
      prev = next;
    }
  }
}

TEST(Runs, FailRecordsErrorAndOneActiveRunPerSite) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  RunRecord run = store.create_run(s.id, 1);
  EXPECT_EQ(code_of([&] { store.create_run(s.id, 2); }), ErrorCode::Conflict);
  store.transition_run(run.id, RunEvent::StartPreprocess, "", 2);
  store.transition_run(run.id, RunEvent::StartReconstruct, "", 3);
  RunRecord failed = store.transition_run(run.id, RunEvent::Fail, "boom", 4);
  EXPECT_EQ(failed.state, RunState::Failed);
  EXPECT_EQ(failed.error, "boom");
  EXPECT_EQ(failed.ended_at, 4);
  EXPECT_NO_THROW(store.create_run(s.id, 5));
}

TEST(Runs, PublishRequiresPostprocessingAndArk) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  RunRecord run = store.create_run(s.id, 1);
  EXPECT_EQ(code_of([&] { store.publish_run(run.id, {"a.glb", "d", "raw", "ark:/1/x", {}}, 2); }),
            ErrorCode::IllegalTransition);
  store.transition_run(run.id, RunEvent::StartPreprocess, "", 2);
  store.transition_run(run.id, RunEvent::StartReconstruct, "", 3);
  store.transition_run(run.id, RunEvent::StartPostprocess, "", 4);
  EXPECT_EQ(code_of([&] { store.transition_run(run.id, RunEvent::Publish, "", 5); }), ErrorCode::IllegalTransition);
}

TEST(Runs, LeaseExcludesOtherHolders) {
  Store store(":memory:");
  SiteRecord s = store.create_site(somanatha(), {}, 1);
  RunRecord run = store.create_run(s.id, 1);
  EXPECT_TRUE(store.try_acquire_run_lease(run.id, "w1", 100, 200));
  EXPECT_FALSE(store.try_acquire_run_lease(run.id, "w2", 150, 250));
  EXPECT_TRUE(store.try_acquire_run_lease(run.id, "w1", 150, 300));
  EXPECT_TRUE(store.try_acquire_run_lease(run.id, "w2", 300, 400));
  store.release_run_lease(run.id, "w1");  // not the holder: no effect
  EXPECT_EQ(store.run_lease(run.id).holder, "w2");
}

TEST(Jobs, IdempotencyKeyDedupes) {
  Store store(":memory:");
  EnqueueRequest req{JobKind::ExecuteRun, R"({"run_id":1})"};
  JobEnvelope a = store.enqueue_job(req, 1);
  JobEnvelope b = store.enqueue_job(req, 2);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.idempotency_key, Store::idempotency_key(JobKind::ExecuteRun, R"({"run_id":1})"));
  req.payload = R"({"run_id":2})";
  EXPECT_NE(store.enqueue_job(req, 3).id, a.id);
}

TEST(Jobs, VisibilityTimeoutRedeliversWithAttemptBump) {
  Store store(":memory:");
  store.enqueue_job({JobKind::PreprocessImage, R"({"x":1})"}, 0);
  auto first = store.claim_job("w1", 10, 100);
  ASSERT_TRUE(first);
  EXPECT_EQ(first->attempts, 1);
  EXPECT_FALSE(store.claim_job("w2", 50, 100));
  auto second = store.claim_job("w2", 110, 100);
  ASSERT_TRUE(second);
  EXPECT_EQ(second->id, first->id);
  EXPECT_EQ(second->attempts, 2);
  EXPECT_FALSE(store.ack_job(first->id, "w1"));
  EXPECT_TRUE(store.ack_job(second->id, "w2"));
}

TEST(Jobs, FifoWithinPriority) {
  Store store(":memory:");
  store.enqueue_job({JobKind::PreprocessImage, R"({"n":1})", 3, 0}, 0);
  store.enqueue_job({JobKind::PreprocessImage, R"({"n":2})", 3, 5}, 0);
  store.enqueue_job({JobKind::PreprocessImage, R"({"n":3})", 3, 0}, 0);
  std::vector<std::string> order;
  while (auto j = store.claim_job("w", 1, 1000)) order.push_back(j->payload);
  EXPECT_EQ(order, (std::vector<std::string>{R"({"n":2})", R"({"n":1})", R"({"n":3})"}));
}

TEST(Periodic, OneHolderPerTick) {
  Store store(":memory:");
  EXPECT_TRUE(store.try_fire_periodic("prune", "a", 1000, 600));
  EXPECT_FALSE(store.try_fire_periodic("prune", "b", 1001, 600));
  EXPECT_FALSE(store.try_fire_periodic("prune", "a", 1500, 600));
  EXPECT_TRUE(store.try_fire_periodic("prune", "a", 1600, 600));
  // a missed stretch of ticks fires once
  EXPECT_TRUE(store.try_fire_periodic("prune", "b", 1600 + 600 * 10, 600));
  EXPECT_FALSE(store.try_fire_periodic("prune", "b", 1600 + 600 * 10 + 1, 600));
}

TEST(Export, SnapshotHasReferentialIntegrity) {
  fixture::TempDir dir;
  {
    Store store(dir.path() / "s.db");
    SiteRecord s = store.create_site(somanatha(), {}, 1);
    ContributorRecord who = store.upsert_contributor("a@example.org", "A");
    std::vector<ImageBlob> blobs = {blob(1), blob(2)};
    store.record_contribution(s.id, who.id, blobs, 2);
  }
  Store reopened(dir.path() / "s.db");
  nlohmann::json snap = reopened.export_json();
  std::set<std::int64_t> contributions;
  for (const auto& c : snap["contributions"]) contributions.insert(c["id"].get<std::int64_t>());
  ASSERT_EQ(snap["images"].size(), 2u);
  for (const auto& img : snap["images"]) EXPECT_TRUE(contributions.count(img["contribution_id"].get<std::int64_t>()));
  EXPECT_TRUE(reopened.healthy());
}
