// Copyright 2026 The Perimeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "perimeter/errors.hpp"
#include "perimeter/network.hpp"

namespace perimeter {
namespace {

GridSpec replica() { return GridSpec{}; }

TEST(BuildGrid, SmallestGrid) {
  GridSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.segments_per_block = 1;
  const Network net = build_grid(spec);
  EXPECT_EQ(net.intersection_count(), 4u);
  for (const auto& l : net.links()) EXPECT_DOUBLE_EQ(l.params.length_m, 150.0);
  EXPECT_TRUE(net.strongly_connected());
}

TEST(BuildGrid, RejectsSingleRow) {
  GridSpec spec;
  spec.rows = 1;
  EXPECT_THROW(build_grid(spec), ConfigError);
}

TEST(BuildGrid, RejectsBadLinkParams) {
  GridSpec spec;
  spec.link.speed_at_capacity_kmh = 60.0;  // above free-flow speed
  EXPECT_THROW(build_grid(spec), ConfigError);
  spec = {};
  spec.link.lanes = 0;
  EXPECT_THROW(build_grid(spec), ConfigError);
}

TEST(BuildGrid, ReplicaCounts) {
  const Network net = build_grid(replica());
  EXPECT_EQ(net.signalized_count(), 36u);
  EXPECT_TRUE(net.strongly_connected());
  for (const auto& l : net.links()) {
    ASSERT_GE(l.from, 0);
    ASSERT_LT(static_cast<std::size_t>(l.to), net.node_count());
  }
}

TEST(BuildGrid, Deterministic) {
  const Network a = build_grid(replica());
  const Network b = build_grid(replica());
  const ProtectedRegion ra = define_protected_region(a, {});
  const ProtectedRegion rb = define_protected_region(b, {});
  EXPECT_EQ(to_document(a, ra), to_document(b, rb));
}

TEST(Link, CapacityNeverExceedsSaturation) {
  Link l;
  l.params.lanes = 2;
  const double cap = l.saturation_flow_veh_per_h();
  const double kj = l.params.jam_density_veh_per_km_lane * l.params.lanes;
  for (int i = 0; i <= 1000; ++i) {
    const double k = kj * i / 1000.0;
    EXPECT_LE(l.fd_flow(k), cap + 1e-9) << k;
    EXPECT_LE(l.supply_flow(k), cap + 1e-9) << k;
  }
  EXPECT_NEAR(l.fd_flow(l.critical_density()), cap, 1e-9);
  EXPECT_DOUBLE_EQ(l.fd_flow(kj), 0.0);
}

TEST(Link, StorageAndFreeFlowTime) {
  Link l;
  EXPECT_DOUBLE_EQ(l.storage_veh(), 24.0);
  EXPECT_EQ(l.storage_cap(), 24);
  EXPECT_NEAR(l.free_flow_time_s(), 10.8, 1e-12);
}

TEST(ProtectedRegion, ReplicaGeometry) {
  const Network net = build_grid(replica());
  const ProtectedRegion r = define_protected_region(net, {});
  EXPECT_EQ(r.monitored.size(), 48u);
  EXPECT_EQ(r.entry_links.size(), 8u);
  EXPECT_DOUBLE_EQ(r.total_length_m, 7200.0);
  for (LinkId z : r.monitored) {
    EXPECT_DOUBLE_EQ(net.link(z).params.length_m, 150.0);
    EXPECT_EQ(net.link(z).params.lanes, 1);
  }
}

TEST(ProtectedRegion, LengthIsExactSum) {
  GridSpec spec;
  spec.link.length_m = 137.3;
  const Network net = build_grid(spec);
  for (const RegionBounds b : {RegionBounds{1, 2, 1, 3}, RegionBounds{2, 5, 2, 5}, RegionBounds{1, 3, 3, 6}}) {
    const ProtectedRegion r = define_protected_region(net, b);
    double sum = 0.0;
    for (LinkId z : r.monitored) sum += net.link(z).params.length_m;
    EXPECT_EQ(r.total_length_m, sum);
  }
}

TEST(ProtectedRegion, EntryExitOrientation) {
  const Network net = build_grid(replica());
  const ProtectedRegion r = define_protected_region(net, {});
  for (LinkId e : r.entry_links) {
    EXPECT_TRUE(r.node_inside[static_cast<std::size_t>(net.link(e).to)]);
    EXPECT_FALSE(r.node_inside[static_cast<std::size_t>(net.link(e).from)]);
    EXPECT_TRUE(r.is_entry(e));
  }
  for (LinkId x : r.exit_links) {
    EXPECT_FALSE(r.node_inside[static_cast<std::size_t>(net.link(x).to)]);
    EXPECT_TRUE(r.node_inside[static_cast<std::size_t>(net.link(x).from)]);
  }
  std::vector<LinkId> both;
  auto ent = r.entry_links;
  auto ex = r.exit_links;
  std::ranges::sort(ent);
  std::ranges::sort(ex);
  std::ranges::set_intersection(ent, ex, std::back_inserter(both));
  EXPECT_TRUE(both.empty());
}

TEST(ProtectedRegion, SingleBlock) {
  GridSpec spec;
  spec.segments_per_block = 1;
  const Network net = build_grid(spec);
  const RegionBounds b{3, 4, 3, 4};
  const ProtectedRegion r = define_protected_region(net, b);
  // Inbound / outbound links of the block are exactly the links crossing it.
  std::vector<LinkId> in, out;
  for (const auto& l : net.links()) {
    const bool from_in = r.node_inside[static_cast<std::size_t>(l.from)];
    const bool to_in = r.node_inside[static_cast<std::size_t>(l.to)];
    if (!from_in && to_in) in.push_back(l.id);
    if (from_in && !to_in) out.push_back(l.id);
  }
  auto ent = r.entry_links;
  auto ex = r.exit_links;
  std::ranges::sort(ent);
  std::ranges::sort(ex);
  EXPECT_EQ(ent, in);
  EXPECT_EQ(ex, out);
  EXPECT_EQ(r.monitored.size(), 4u);
}

TEST(ProtectedRegion, WholeGridIsAnError) {
  const Network net = build_grid(replica());
  EXPECT_THROW(define_protected_region(net, {0, 7, 0, 7}), ConfigError);
}

TEST(ProtectedRegion, OutOfRangeBounds) {
  const Network net = build_grid(replica());
  EXPECT_THROW(define_protected_region(net, {5, 2, 2, 5}), ConfigError);
  EXPECT_THROW(define_protected_region(net, {2, 9, 2, 5}), ConfigError);
}

}  // namespace
}  // namespace perimeter
