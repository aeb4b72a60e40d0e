#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "shortfall/discrete_optimizer.hpp"

using namespace shortfall;

namespace {

AtomTable<Rational> counterexample() {
    const std::vector<Rational> p{Rational(7, 15), Rational(4, 15), Rational(4, 15)};
    const std::vector<Rational> q{Rational(4, 10), Rational(3, 10), Rational(3, 10)};
    return AtomTable<Rational>::single(p, q);
}

AtomTable<double> to_table(const oracle::Knapsack& k) {
    const auto n = static_cast<Eigen::Index>(k.prob.size());
    const auto m = static_cast<Eigen::Index>(k.budget.size());
    std::vector<std::size_t> ids(k.prob.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    Vector<double> p(n);
    Matrix<double> c(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = k.prob[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m; ++j) c(i, j) = k.cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return AtomTable<double>(ids, p, c);
}

oracle::Knapsack random_knapsack(std::mt19937_64& rng, std::size_t n, std::size_t m, double zero_cost_share = 0.15) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    oracle::Knapsack k;
    k.prob = oracle::random_simplex(rng, n);
    std::vector<double> totals(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(m);
        const bool free = unit(rng) < zero_cost_share;
        for (std::size_t j = 0; j < m; ++j) totals[j] += (row[j] = free ? 0.0 : unit(rng));
        k.cost.push_back(row);
    }
    for (std::size_t j = 0; j < m; ++j) k.budget.push_back(totals[j] * unit(rng));
    return k;
}

std::vector<std::size_t> positions(const SuccessSet<double>& s) { return s.member_ids; }

}  // namespace

TEST_CASE("naive level-set construction loses to exact search on the three-atom counterexample") {
    const auto table = counterexample();
    const Rational budget(6, 10);

    const auto exact = solve_exact(table, {budget});
    CHECK(exact.member_ids == std::vector<std::size_t>{1, 2});
    CHECK(exact.probability == Rational(8, 15));
    CHECK(exact.costs_used.front() == budget);
    CHECK(exact.certificate == Certificate::ExhaustiveOptimal);

    const auto naive = solve_naive_ratio(table, budget);
    CHECK(naive.member_ids == std::vector<std::size_t>{0});
    CHECK(naive.probability == Rational(7, 15));
    CHECK(naive.certificate == Certificate::NaiveDiagnostic);
}

TEST_CASE("solve_exact edge cases") {
    SUBCASE("zero costs take everything") {
        const std::vector<double> p{0.2, 0.3, 0.5};
        const std::vector<double> c{0.0, 0.0, 0.0};
        const auto s = solve_exact(AtomTable<double>::single(p, c), {0.0});
        CHECK(s.member_ids == std::vector<std::size_t>{0, 1, 2});
        CHECK(s.probability == doctest::Approx(1.0));
    }
    SUBCASE("empty table") {
        const auto s = solve_exact(AtomTable<double>{}, std::span<const double>{});
        CHECK(s.member_ids.empty());
        CHECK(s.probability == 0.0);
    }
    SUBCASE("negative budget") {
        CHECK_THROWS_AS(solve_exact(counterexample(), {Rational(-1)}), DomainError);
    }
    SUBCASE("budget count mismatch") {
        const std::vector<Rational> b{Rational(1), Rational(1)};
        CHECK_THROWS_AS(solve_exact(counterexample(), std::span<const Rational>(b)), DomainError);
    }
    SUBCASE("invalid tables") {
        const std::vector<double> p{0.7, 0.6};
        const std::vector<double> c{0.1, 0.1};
        CHECK_THROWS_AS(AtomTable<double>::single(p, c), DomainError);
        const std::vector<double> p2{0.5, 0.0};
        CHECK_THROWS_AS(AtomTable<double>::single(p2, c), DomainError);
        const std::vector<double> c2{0.1, -0.1};
        const std::vector<double> p3{0.5, 0.5};
        CHECK_THROWS_AS(AtomTable<double>::single(p3, c2), DomainError);
    }
    SUBCASE("tie-break prefers the cheaper set, then the smaller ids") {
        // {0} and {1} tie on probability, {1} is cheaper; {2} ties {1} on both.
        const std::vector<Rational> p{Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)};
        const std::vector<Rational> c{Rational(3), Rational(2), Rational(2), Rational(5)};
        const auto s = solve_exact(AtomTable<Rational>::single(p, c), {Rational(3)});
        CHECK(s.member_ids == std::vector<std::size_t>{1});
    }
}

TEST_CASE("solve_exact agrees with exhaustive enumeration") {
    std::mt19937_64 rng(7);
    SUBCASE("twelve atoms, one constraint") {
        for (int trial = 0; trial < 50; ++trial) {
            const auto k = random_knapsack(rng, 12, 1);
            const auto ref = oracle::enumerate(k);
            const auto got = solve_exact(to_table(k), std::span<const double>(k.budget));
            CHECK(got.probability == doctest::Approx(ref.best).epsilon(1e-12));
            CHECK(oracle::fits(got.costs_used[0], k.budget[0]));
            CHECK(std::find(ref.optimal_sets.begin(), ref.optimal_sets.end(), positions(got)) !=
                  ref.optimal_sets.end());
        }
    }
    SUBCASE("up to fourteen atoms, up to three constraints") {
        std::uniform_int_distribution<std::size_t> size(1, 14);
        std::uniform_int_distribution<std::size_t> constraints(1, 3);
        for (int trial = 0; trial < 300; ++trial) {
            const auto k = random_knapsack(rng, size(rng), constraints(rng));
            const auto ref = oracle::enumerate(k);
            const auto got = solve_exact(to_table(k), std::span<const double>(k.budget));
            CHECK(got.probability == doctest::Approx(ref.best).epsilon(1e-12));
            for (std::size_t j = 0; j < k.budget.size(); ++j) CHECK(oracle::fits(got.costs_used[j], k.budget[j]));
        }
    }
}

TEST_CASE("branch-and-bound beyond the enumeration limit matches an integer DP") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> cost(0, 30);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 24 + static_cast<std::size_t>(trial % 16);
        const std::size_t m = 1 + static_cast<std::size_t>(trial % 2);
        const auto prob = oracle::random_simplex(rng, n);
        std::vector<std::vector<int>> icost(n, std::vector<int>(m));
        std::vector<int> budget(m, 0);
        for (auto& row : icost) {
            for (std::size_t j = 0; j < m; ++j) budget[j] += (row[j] = cost(rng));
        }
        for (auto& b : budget) b = b / 3;
        const double best = oracle::integer_knapsack(prob, icost, budget);

        const auto nn = static_cast<Eigen::Index>(n);
        std::vector<std::size_t> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = 100 + i;
        Vector<double> p(nn);
        Matrix<double> c(nn, static_cast<Eigen::Index>(m));
        std::vector<double> b(budget.begin(), budget.end());
        for (Eigen::Index i = 0; i < nn; ++i) {
            p(i) = prob[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < m; ++j) c(i, static_cast<Eigen::Index>(j)) = icost[static_cast<std::size_t>(i)][j];
        }
        const auto got = solve_exact(AtomTable<double>(ids, p, c), std::span<const double>(b));
        CHECK(got.probability == doctest::Approx(best).epsilon(1e-12));
        for (std::size_t j = 0; j < m; ++j) CHECK(got.costs_used[j] <= b[j]);
    }
}

TEST_CASE("branch-and-bound groups identical atoms and keeps the smallest ids") {
    // 30 identical atoms of cost 1 and budget 7: any 7 are optimal.
    std::vector<Rational> p(30, Rational(1, 30));
    std::vector<Rational> c(30, Rational(1));
    const auto s = solve_exact(AtomTable<Rational>::single(p, c), {Rational(7)});
    CHECK(s.certificate == Certificate::BranchBoundOptimal);
    CHECK(s.member_ids == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
    CHECK(s.probability == Rational(7, 30));
}

TEST_CASE("solve_exact_all lists every optimal set") {
    SUBCASE("single affordable atom") {
        const std::vector<double> p{1.0};
        const std::vector<double> c{0.5};
        const auto all = solve_exact_all(AtomTable<double>::single(p, c), std::vector<double>{1.0});
        REQUIRE(all.size() == 1);
        CHECK(all[0].member_ids == std::vector<std::size_t>{0});
    }
    SUBCASE("matches filtering all subsets") {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> small(1, 4);
        for (int trial = 0; trial < 100; ++trial) {
            // Coarse rational grid so ties actually occur.
            oracle::Knapsack k;
            std::vector<Rational> p;
            std::vector<Rational> c;
            for (int i = 0; i < 8; ++i) {
                p.emplace_back(small(rng), 32);
                c.emplace_back(small(rng));
                k.prob.push_back(to_double(p.back()));
                k.cost.push_back({to_double(c.back())});
            }
            const Rational budget(small(rng) + small(rng) + small(rng));
            k.budget = {to_double(budget)};
            const auto ref = oracle::enumerate(k);
            const auto all = solve_exact_all(AtomTable<Rational>::single(p, c), std::vector<Rational>{budget});
            std::vector<std::vector<std::size_t>> got;
            for (const auto& s : all) got.push_back(s.member_ids);
            CHECK(got == ref.optimal_sets);
            // Ties go to the cheapest optimal set, then to the smallest id list.
            const auto cheapest = std::min_element(all.begin(), all.end(), [](const auto& a, const auto& b) {
                Rational ca(0), cb(0);
                for (const auto& x : a.costs_used) ca += x;
                for (const auto& x : b.costs_used) cb += x;
                return ca < cb;
            });
            CHECK(solve_exact(AtomTable<Rational>::single(p, c), {budget}).member_ids == cheapest->member_ids);
        }
    }
    SUBCASE("more than twenty atoms is a capability error") {
        std::vector<double> p(21, 1.0 / 21);
        std::vector<double> c(21, 1.0);
        CHECK_THROWS_AS(solve_exact_all(AtomTable<double>::single(p, c), std::vector<double>{3.0}), CapabilityError);
    }
}

TEST_CASE("solve_monotone_greedy") {
    const std::vector<double> p{0.5, 0.3, 0.2};
    const std::vector<double> c{0.1, 0.2, 0.7};
    const auto table = AtomTable<double>::single(p, c);

    const auto s = solve_monotone_greedy(table, 0.3);
    CHECK(s.member_ids == std::vector<std::size_t>{0, 1});
    CHECK(s.probability == doctest::Approx(0.8));
    CHECK(s.certificate == Certificate::MonotoneGreedy);

    oracle::Knapsack k{p, {{0.1}, {0.2}, {0.7}}, {0.3}};
    CHECK(oracle::enumerate(k).best == doctest::Approx(0.8));

    CHECK(solve_monotone_greedy(table, 1.0).member_ids.size() == 3);
    CHECK(solve_monotone_greedy(table, 0.05).member_ids.empty());

    const std::vector<double> unsorted{0.2, 0.3, 0.5};
    CHECK_THROWS_AS(solve_monotone_greedy(AtomTable<double>::single(unsorted, c), 0.3), PreconditionError);
    const std::vector<double> costs_down{0.7, 0.2, 0.1};
    CHECK_THROWS_AS(solve_monotone_greedy(AtomTable<double>::single(p, costs_down), 0.3), PreconditionError);
}

TEST_CASE("greedy equals exact whenever its ordering holds") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(1, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size(rng);
        auto p = oracle::random_simplex(rng, n);
        std::sort(p.rbegin(), p.rend());
        std::vector<double> c(n);
        double total = 0.0;
        for (auto& x : c) total += (x = unit(rng) < 0.1 ? 0.0 : unit(rng));
        std::sort(c.begin(), c.end());
        const auto table = AtomTable<double>::single(p, c);
        const double budget = total * unit(rng);
        const auto greedy = solve_monotone_greedy(table, budget);
        const auto exact = solve_exact(table, {budget});
        CHECK(greedy.probability == doctest::Approx(exact.probability).epsilon(1e-12));
    }
}

TEST_CASE("naive construction never beats exact search") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto k = random_knapsack(rng, 10, 1);
        const auto table = to_table(k);
        const auto naive = solve_naive_ratio(table, k.budget[0]);
        const auto exact = solve_exact(table, std::span<const double>(k.budget));
        CHECK(naive.probability <= exact.probability + 1e-15);
        CHECK(oracle::fits(naive.costs_used[0], k.budget[0]));
    }
    const std::vector<double> p{0.25, 0.25, 0.5};
    const std::vector<double> c{0.1, 0.1, 0.2};
    CHECK(solve_naive_ratio(AtomTable<double>::single(p, c), 0.4).member_ids.size() == 3);
}

TEST_CASE("neyman_pearson_threshold") {
    const std::vector<double> ratios{3.0, 2.0, 1.0};
    const std::vector<double> masses{0.2, 0.3, 0.5};
    const auto level = neyman_pearson_threshold<double>(ratios, masses, 0.5);
    REQUIRE(level.beta.has_value());
    CHECK(*level.beta == 2.0);
    CHECK(level.members == std::vector<std::size_t>{0, 1});
    CHECK(level.certified);

    const auto whole = neyman_pearson_threshold<double>(ratios, masses, 1.5);
    CHECK(*whole.beta == 1.0);
    CHECK(whole.members.size() == 3);
    CHECK(whole.certified);

    // Counterexample: the level set {omega_1} has mass 4/10 < 6/10.
    const std::vector<Rational> r{Rational(63, 54), Rational(48, 54), Rational(48, 54)};
    const std::vector<Rational> q{Rational(4, 10), Rational(3, 10), Rational(3, 10)};
    const auto np = neyman_pearson_threshold<Rational>(r, q, Rational(6, 10));
    CHECK(np.members == std::vector<std::size_t>{0});
    CHECK_FALSE(np.certified);

    const auto none = neyman_pearson_threshold<double>(ratios, masses, 0.1);
    CHECK_FALSE(none.beta.has_value());
    CHECK(none.members.empty());
}

TEST_CASE("structural properties of solve_exact") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto k = random_knapsack(rng, 9, 1 + static_cast<std::size_t>(trial % 2), 0.3);
        const auto table = to_table(k);
        const auto s = solve_exact(table, std::span<const double>(k.budget));
        for (std::size_t i = 0; i < k.prob.size(); ++i) {
            if (std::all_of(k.cost[i].begin(), k.cost[i].end(), [](double x) { return x == 0.0; })) {
                CHECK(s.contains(i));
            }
        }
        auto larger = k.budget;
        for (auto& b : larger) b *= 1.0 + unit(rng);
        const auto s2 = solve_exact(table, std::span<const double>(larger));
        CHECK(s.probability <= s2.probability + 1e-15);
    }
}
