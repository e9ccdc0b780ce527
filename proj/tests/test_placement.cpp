#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ccsched/placement.hpp"
#include "ccsched/profiles.hpp"

using namespace ccsched;

namespace {

JobSpec job(int n, const char* profile = "ResNet-50", int iterations = 100)
{
    JobSpec j;
    j.n_gpus = n;
    j.iterations = iterations;
    j.profile = ProfileRegistry::builtin().get(profile);
    return j;
}

ClusterConfig small_cluster(int servers, int gpus)
{
    ClusterConfig c;
    c.n_servers = servers;
    c.gpus_per_server = gpus;
    return c;
}

void fill_memory(ClusterState& s, GpuId id) { s.at(id).memory_used = s.at(id).memory_capacity; }

void check_valid(const std::vector<GpuId>& gpus, const JobSpec& j, const ClusterState& s)
{
    CHECK(static_cast<int>(gpus.size()) == j.n_gpus);
    CHECK(std::set<GpuId>(gpus.begin(), gpus.end()).size() == gpus.size());
    CHECK(std::is_sorted(gpus.begin(), gpus.end()));
    for (const auto& g : gpus) CHECK(s.fits(s.at(g), j));
}

}  // namespace

TEST_CASE("policy strings")
{
    CHECK(PlacementPolicy::parse("lwf:1") == PlacementPolicy{PlacementKind::LeastWorkloadFirst, 1});
    CHECK(PlacementPolicy::parse("lwf:4").kappa == 4);
    CHECK(PlacementPolicy::parse("ff").kind == PlacementKind::FirstFit);
    CHECK(PlacementPolicy::parse("ls").kind == PlacementKind::ListScheduling);
    CHECK(PlacementPolicy::parse("rand").kind == PlacementKind::Random);
    for (const char* s : {"lwf:1", "lwf:8", "ff", "ls", "rand"}) CHECK(PlacementPolicy::parse(s).to_string() == s);
    for (const char* s : {"", "lwf", "lwf:0", "lwf:x", "best", "FF"})
        CHECK_THROWS_AS(PlacementPolicy::parse(s), ConfigError);
}

TEST_CASE("LWF on an idle cluster")
{
    ClusterState s(ClusterConfig{});
    CHECK(lwf_place(job(1), 1, s) == std::vector<GpuId>{{0, 0}});
    const auto eight = lwf_place(job(8), 1, s);
    CHECK(eight == std::vector<GpuId>{{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 0}, {1, 1}, {1, 2}, {1, 3}});
}

TEST_CASE("LWF consolidates onto the fewest servers when idle")
{
    for (int n : {2, 3, 4, 5, 8, 12, 16, 32}) {
        ClusterState s(ClusterConfig{});
        const auto gpus = lwf_place(job(n), 1, s);
        check_valid(gpus, job(n), s);
        CHECK(static_cast<int>(servers_of(gpus).size()) == (n + 3) / 4);
    }
}

TEST_CASE("LWF with n <= kappa equals a brute-force least-loaded pick")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> load(0.0, 100.0);
    std::bernoulli_distribution full(0.2);
    for (int trial = 0; trial < 200; ++trial) {
        ClusterState s(small_cluster(4, 4));
        for (auto& g : s.gpus) {
            g.remaining_workload = std::round(load(rng));  // force ties
            if (full(rng)) g.memory_used = g.memory_capacity;
        }
        const int n = 1 + trial % 4;
        const auto j = job(n);
        const auto got = lwf_place(j, 4, s);

        std::vector<std::tuple<double, int, int>> feasible;
        for (const auto& g : s.gpus)
            if (s.fits(g, j)) feasible.emplace_back(g.remaining_workload, g.id.server, g.id.gpu);
        std::sort(feasible.begin(), feasible.end());
        if (static_cast<int>(feasible.size()) < n) {
            CHECK(got.empty());
            continue;
        }
        std::vector<GpuId> expect;
        for (int i = 0; i < n; ++i) expect.push_back({std::get<1>(feasible[i]), std::get<2>(feasible[i])});
        std::sort(expect.begin(), expect.end());
        CHECK(got == expect);
        CHECK(ls_place(j, s) == expect);
    }
}

TEST_CASE("LWF with n > kappa walks servers by total workload")
{
    ClusterState s(small_cluster(3, 2));
    s.at({0, 0}).remaining_workload = 10;
    s.at({1, 0}).remaining_workload = 1;
    s.at({1, 1}).remaining_workload = 0;
    s.at({2, 0}).remaining_workload = 3;
    s.at({2, 1}).remaining_workload = 4;
    // Server loads: 10, 1, 7. Order: server 1, server 2, server 0.
    CHECK(lwf_place(job(3), 1, s) == std::vector<GpuId>{{1, 0}, {1, 1}, {2, 0}});
    // A memory-full GPU is skipped and the walk continues past the ceiling.
    fill_memory(s, {2, 0});
    fill_memory(s, {2, 1});
    CHECK(lwf_place(job(3), 1, s) == std::vector<GpuId>{{0, 1}, {1, 0}, {1, 1}});
}

TEST_CASE("LWF fails when memory is short")
{
    ClusterState s(small_cluster(1, 4));
    fill_memory(s, {0, 3});
    CHECK(lwf_place(job(4), 1, s).empty());
    CHECK(lwf_place(job(4), 4, s).empty());
    CHECK(lwf_place(job(3), 1, s).size() == 3);
}

TEST_CASE("first fit")
{
    ClusterState s(ClusterConfig{});
    CHECK(ff_place(job(2), s) == std::vector<GpuId>{{0, 0}, {0, 1}});
    fill_memory(s, {0, 0});
    CHECK(ff_place(job(2), s) == std::vector<GpuId>{{0, 1}, {0, 2}});
    ClusterState tiny(small_cluster(1, 2));
    CHECK(ff_place(job(3), tiny).empty());
}

TEST_CASE("list scheduling picks the least-loaded GPUs")
{
    ClusterState s(small_cluster(2, 2));
    CHECK(ls_place(job(2), s) == std::vector<GpuId>{{0, 0}, {0, 1}});
    const double ledger[] = {0, 5, 1, 2};
    for (int i = 0; i < 4; ++i) s.gpus[i].remaining_workload = ledger[i];
    CHECK(ls_place(job(2), s) == std::vector<GpuId>{{0, 0}, {1, 0}});
    CHECK(ls_place(job(5), s).empty());
}

TEST_CASE("FF, LS and LWF agree on an idle cluster")
{
    for (int n : {1, 2, 4, 8}) {
        ClusterState s(ClusterConfig{});
        const auto ff = ff_place(job(n), s);
        CHECK(ls_place(job(n), s) == ff);
        CHECK(lwf_place(job(n), 1, s) == ff);
    }
}

TEST_CASE("random placement")
{
    ClusterState s(ClusterConfig{});
    const auto a = rand_place(job(6), s, 99);
    CHECK(a == rand_place(job(6), s, 99));
    check_valid(a, job(6), s);

    ClusterState tiny(small_cluster(2, 2));
    fill_memory(tiny, {1, 1});
    CHECK(rand_place(job(3), tiny, 3) == std::vector<GpuId>{{0, 0}, {0, 1}, {1, 0}});
    CHECK(rand_place(job(4), tiny, 3).empty());
}

TEST_CASE("random placement is uniform over GPUs")
{
    ClusterState s(ClusterConfig{});
    const int draws = 10000;
    std::vector<int> hits(64, 0);
    for (int i = 0; i < draws; ++i) {
        const auto g = rand_place(job(1), s, static_cast<uint64_t>(i) * 7919 + 1);
        ++hits[s.config.flat_index(g.front())];
    }
    const double expect = draws / 64.0;
    const double sigma = std::sqrt(draws * (1.0 / 64) * (63.0 / 64));
    double chi2 = 0.0;
    for (int h : hits) {
        CHECK(std::abs(h - expect) < 5 * sigma);
        chi2 += (h - expect) * (h - expect) / expect;
    }
    // 63 degrees of freedom; 110 is beyond the 99.99th percentile.
    CHECK(chi2 < 110.0);
}

TEST_CASE("commit and release keep the ledgers consistent")
{
    ClusterState s(small_cluster(2, 2));
    const auto j = job(2, "VGG-16");
    const auto gpus = lwf_place(j, 1, s);
    commit_placement(s, j, gpus, 50.0);
    for (const auto& g : gpus) {
        CHECK(s.at(g).remaining_workload == 50.0);
        CHECK(s.at(g).memory_used == j.profile.gpu_memory_usage);
    }
    // The next job lands on the other server.
    CHECK(lwf_place(j, 1, s) == std::vector<GpuId>{{1, 0}, {1, 1}});
    release_placement(s, j, gpus, 20.0);
    for (const auto& g : gpus) {
        CHECK(s.at(g).remaining_workload == 30.0);
        CHECK(s.at(g).memory_used == 0.0);
    }
}

TEST_CASE("SRSF priority")
{
    CHECK(SrsfKey{5, 0, 1} < SrsfKey{10, 0, 0});
    CHECK(SrsfKey{5, 1, 9} < SrsfKey{5, 3, 0});
    CHECK(SrsfKey{5, 1, 1} < SrsfKey{5, 1, 2});

    auto vgg = job(2, "VGG-16", 1000);
    auto resnet = job(1, "ResNet-50", 2000);
    CHECK(srsf_priority(vgg).remaining_service == doctest::Approx(179.0));
    CHECK(srsf_priority(resnet).remaining_service == doctest::Approx(124.8));
    CHECK(srsf_priority(resnet) < srsf_priority(vgg));
}
