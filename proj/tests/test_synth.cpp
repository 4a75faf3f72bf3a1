#include <doctest.h>

#include <cmath>

#include "pmotion/digest.hpp"
#include "pmotion/rotation.hpp"
#include "pmotion/skeleton.hpp"
#include "pmotion/synth.hpp"

using namespace pmotion;

namespace {

MotionRecipe recipe_of(MotionKind kind, uint64_t seed, int frames = 60) {
  MotionRecipe r;
  r.kind = kind;
  r.frames = frames;
  r.seed = seed;
  r.mass_kg = 72.5;
  r.height_scale = 1.0;
  return r;
}

// Mat large enough for every kind, including full-length walks.
MatSpec big_mat() {
  MatSpec m;
  m.height = 112;
  m.width = 64;
  m.scale = 0.02;
  return m;
}

constexpr MotionKind kAllKinds[] = {MotionKind::Stand, MotionKind::Sway,
                                    MotionKind::Walk,  MotionKind::Turn,
                                    MotionKind::Jump,  MotionKind::Squat};

std::string joints_digest(const JointSequence& js) {
  Fnv1a f;
  f.update(js.pos.data(), sizeof(double) * size_t(js.pos.size()));
  return f.hex();
}

}  // namespace

TEST_CASE("synth: generation is deterministic in the recipe seed") {
  for (MotionKind kind : kAllKinds) {
    GeneratedMotion a = generate_motion(recipe_of(kind, 42));
    GeneratedMotion b = generate_motion(recipe_of(kind, 42));
    CHECK(joints_digest(a.joints) == joints_digest(b.joints));
    GeneratedMotion c = generate_motion(recipe_of(kind, 43));
    CHECK(joints_digest(a.joints) != joints_digest(c.joints));
  }
}

TEST_CASE("synth: every kind satisfies the encoder preconditions") {
  for (MotionKind kind : kAllKinds)
    for (uint64_t seed = 1; seed <= 8; ++seed)
      for (double scale : {0.9, 1.0, 1.12}) {
        MotionRecipe r = recipe_of(kind, seed, seed % 2 ? 48 : 96);
        r.height_scale = scale;
        GeneratedMotion m = generate_motion(r);  // throws on IK failure
        REQUIRE(m.joints.frames() == r.frames);
        CHECK(m.joints.pos.allFinite());
        const Vector3d root0 = m.joints.joint(0, Pelvis);
        CHECK(std::abs(root0.x()) < 1e-9);
        CHECK(std::abs(root0.z()) < 1e-9);
        for (int f = 0; f < m.joints.frames(); f += 9)
          CHECK(yaw_purity_error(m.rotations[f][Pelvis]) < 1e-9);
      }
}

TEST_CASE("synth: stance feet stay planted and low") {
  for (MotionKind kind : {MotionKind::Walk, MotionKind::Turn}) {
    GeneratedMotion m = generate_motion(recipe_of(kind, 3, 96));
    MatD contacts = detect_foot_contacts(m.joints);
    int planted = 0;
    for (int f = 1; f < m.joints.frames(); ++f)
      for (int k = 0; k < kContactDim; ++k)
        if (contacts(f, k) > 0.5 && contacts(f - 1, k) > 0.5) {
          const int j = kContactJoints[k];
          CHECK((m.joints.joint(f, j) - m.joints.joint(f - 1, j)).norm() <
                1e-9);
          ++planted;
        }
    CHECK(planted > 40);  // gait spends most of its time in stance
    // Both feet never leave the ground at once while walking.
    for (int f = 0; f < m.joints.frames(); ++f)
      CHECK(contacts.row(f).sum() >= 1.0);
  }
}

TEST_CASE("synth: stand and squat keep all four contacts") {
  for (MotionKind kind : {MotionKind::Stand, MotionKind::Squat}) {
    GeneratedMotion m = generate_motion(recipe_of(kind, 4, 64));
    MatD contacts = detect_foot_contacts(m.joints);
    CHECK(contacts.minCoeff() == 1.0);
  }
}

TEST_CASE("synth: jump has an airborne phase with clean edges") {
  GeneratedMotion m = generate_motion(recipe_of(MotionKind::Jump, 5, 64));
  MatD contacts = detect_foot_contacts(m.joints);
  int airborne = 0;
  for (int f = 0; f < m.joints.frames(); ++f)
    if (contacts.row(f).sum() == 0.0) ++airborne;
  CHECK(airborne >= 4);
  CHECK(contacts.row(0).sum() == 4.0);
  CHECK(contacts.row(m.joints.frames() - 1).sum() == 4.0);
  // Root apex clears standing height; the track stays frame-continuous.
  double apex = 0;
  for (int f = 0; f < m.joints.frames(); ++f)
    apex = std::max(apex, m.joints.joint(f, Pelvis).y());
  CHECK(apex > 0.93);
  for (int f = 1; f < m.joints.frames(); ++f)
    CHECK((m.joints.joint(f, Pelvis) - m.joints.joint(f - 1, Pelvis)).norm() <
          0.16);
}

TEST_CASE("synth: walk root advances along +z only") {
  GeneratedMotion m = generate_motion(recipe_of(MotionKind::Walk, 6, 72));
  double prev = 0;
  for (int f = 0; f < m.joints.frames(); ++f) {
    const Vector3d r = m.joints.joint(f, Pelvis);
    CHECK(std::abs(r.x()) < 1e-9);
    CHECK(r.z() >= prev - 1e-12);
    prev = r.z();
  }
  CHECK(prev > 0.5);
}

TEST_CASE("synth: turn accumulates heading") {
  GeneratedMotion m = generate_motion(recipe_of(MotionKind::Turn, 7, 96));
  double total = 0;
  double prev = yaw_of(m.rotations[0][Pelvis]);
  for (int f = 1; f < m.joints.frames(); ++f) {
    const double y = yaw_of(m.rotations[f][Pelvis]);
    total += wrap_angle(y - prev);
    prev = y;
  }
  CHECK(std::abs(total) > 0.25);
  CHECK(std::abs(total) < 2.2);
}

TEST_CASE("synth: rendered pressure conserves body weight") {
  for (MotionKind kind : kAllKinds) {
    SequenceRecord rec = generate_record(recipe_of(kind, 8, 64), big_mat());
    CHECK(rec.clip_warnings == 0);
    const double expect = rec.recipe.mass_kg * kGravity;
    for (int f = 0; f < rec.pressure.frames(); ++f) {
      const double sum = rec.pressure.maps[f].cast<double>().sum();
      const double contact_count = rec.pose.data(f, kColContacts) +
                                   rec.pose.data(f, kColContacts + 1) +
                                   rec.pose.data(f, kColContacts + 2) +
                                   rec.pose.data(f, kColContacts + 3);
      if (contact_count == 0.0) {
        CHECK(sum == 0.0);
      } else {
        CHECK(std::abs(sum - expect) / expect < 1e-6);
      }
    }
  }
}

TEST_CASE("synth: pressure centroid tracks the support centroid") {
  SequenceRecord rec = single_support_record(11, 48, big_mat());
  const MatD contacts = rec.pose.data.rightCols(kContactDim).cast<double>();
  for (int f = 0; f < rec.pressure.frames(); ++f) {
    auto cop = world_cop(rec.pressure.maps[f], rec.calib);
    REQUIRE(cop.has_value());
    const Vector3d expect = support_centroid(rec.joints, contacts, f);
    CHECK((*cop - expect).norm() < 0.02);
  }
}

TEST_CASE("synth: single support record loads one foot only") {
  SequenceRecord rec = single_support_record(12, 40, big_mat());
  for (int f = 0; f < rec.pose.frames(); ++f) {
    CHECK(rec.pose.data(f, kColContacts + 0) == 1.0f);  // L ankle
    CHECK(rec.pose.data(f, kColContacts + 1) == 1.0f);  // L foot
    CHECK(rec.pose.data(f, kColContacts + 2) == 0.0f);
    CHECK(rec.pose.data(f, kColContacts + 3) == 0.0f);
  }
}

TEST_CASE("synth: records stay on the mat across kinds and seeds") {
  for (MotionKind kind : kAllKinds)
    for (uint64_t seed : {21u, 22u, 23u}) {
      SequenceRecord rec = generate_record(recipe_of(kind, seed, 80), big_mat());
      CHECK_MESSAGE(rec.clip_warnings == 0, "kind ", kind_name(kind), " seed ",
                    seed);
    }
}

TEST_CASE("synth: augmentation rotates the whole record consistently") {
  SequenceRecord rec = generate_record(recipe_of(MotionKind::Walk, 13, 64),
                                       big_mat());
  Rng rng(99);
  SequenceRecord aug = augment_record(rec, big_mat(), rng);
  const double theta = yaw_of(aug.rotations[0][Pelvis]) -
                       yaw_of(rec.rotations[0][Pelvis]);
  const Matrix3d r = rot_y(theta);
  for (int f = 0; f < rec.joints.frames(); f += 7)
    for (int j = 0; j < kJoints; ++j) {
      const Vector3d expect = r * rec.joints.joint(f, j);
      CHECK((aug.joints.joint(f, j) - expect).norm() < 1e-9);
    }
  // Pressure/motion agreement survives the augmentation.
  const MatD contacts = aug.pose.data.rightCols(kContactDim).cast<double>();
  for (int f = 0; f < aug.pressure.frames(); f += 5) {
    auto cop = world_cop(aug.pressure.maps[f], aug.calib);
    REQUIRE(cop.has_value());
    CHECK((*cop - support_centroid(aug.joints, contacts, f)).norm() < 0.05);
  }
  CHECK(aug.captions == rec.captions);
}

TEST_CASE("synth: captions are present, kind-specific and deterministic") {
  for (MotionKind kind : kAllKinds) {
    SequenceRecord a = generate_record(recipe_of(kind, 14, 64), big_mat());
    SequenceRecord b = generate_record(recipe_of(kind, 14, 64), big_mat());
    CHECK(a.captions == b.captions);
    for (const auto& c : a.captions) CHECK_FALSE(c.empty());
    // The detail gradient: the most detailed caption is the longest.
    CHECK(a.captions[0].size() > a.captions[4].size());
  }
  SequenceRecord walk = generate_record(recipe_of(MotionKind::Walk, 15, 64),
                                        big_mat());
  CHECK(walk.captions[4].find("walk") != std::string::npos);
  SequenceRecord jump = generate_record(recipe_of(MotionKind::Jump, 15, 64),
                                        big_mat());
  CHECK(jump.captions[4].find("jump") != std::string::npos);
}

TEST_CASE("synth: kind names round trip") {
  for (MotionKind kind : kAllKinds)
    CHECK(kind_from_name(kind_name(kind)) == kind);
  CHECK_THROWS_AS(kind_from_name("cartwheel"), Error);
}
