#include <catch2/catch.hpp>

#include <numeric>

#include "topicdiff/posterior.hpp"

using topicdiff::AssociationConfig;
using topicdiff::TermPosterior;
using topicdiff::TopicPrior;

namespace {

const AssociationConfig kAssoc{1e-6};

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

}  // namespace

TEST_CASE("topic_prior counts associated documents") {
    CHECK(topic_prior(mat({{1, 0}, {0, 1}}), kAssoc).probs == std::vector<double>{0.5, 0.5});

    const TopicPrior skew = topic_prior(mat({{1, 1}, {1, 1}, {1, 0}}), kAssoc);
    CHECK(skew.probs[0] == Approx(3.0 / 5.0).margin(1e-15));
    CHECK(skew.probs[1] == Approx(2.0 / 5.0).margin(1e-15));

    const TopicPrior uniform = topic_prior(mat({{0.2, 0.9}, {0.4, 0.1}}), kAssoc);
    CHECK(uniform.probs == std::vector<double>{0.5, 0.5});

    CHECK_THROWS_AS(topic_prior(Eigen::MatrixXd::Zero(3, 2), kAssoc), std::runtime_error);
    CHECK_THROWS_AS(topic_prior(mat({{1, 0}}), AssociationConfig{0.0}), std::invalid_argument);
}

TEST_CASE("term_prior is the associated-topic fraction") {
    const Eigen::MatrixXd h_hat = mat({{0.5, 0.0, 0.1, 0.3},
                                       {0.5, 0.0, 0.2, 0.0},
                                       {0.0, 0.0, 0.3, 0.0},
                                       {0.0, 0.0, 0.4, 0.0}});
    const auto prior = term_prior(h_hat, kAssoc);
    CHECK(prior.probs[0] == 0.5);
    CHECK(prior.probs[1] == 0.0);   // absent everywhere
    CHECK(prior.probs[2] == 1.0);   // present in all k topics
    CHECK(prior.probs[3] == 0.25);
}

TEST_CASE("term_posterior renormalizes Bayes numerators") {
    const Eigen::MatrixXd h_hat = mat({{0.3, 0.0, 0.5}, {0.1, 0.0, 0.5}});
    const TopicPrior prior{{0.5, 0.5}};

    SECTION("worked example") {
        const TermPosterior post = term_posterior(h_hat, prior, 0, kAssoc);
        REQUIRE(post.supported);
        CHECK(post.dist[0] == Approx(0.75).margin(1e-12));
        CHECK(post.dist[1] == Approx(0.25).margin(1e-12));
        CHECK(std::accumulate(post.dist.begin(), post.dist.end(), 0.0) ==
              Approx(1.0).margin(1e-9));
    }

    SECTION("uniform prior and constant column give a uniform posterior") {
        const TermPosterior post = term_posterior(h_hat, prior, 2, kAssoc);
        REQUIRE(post.supported);
        CHECK(post.dist[0] == Approx(0.5).margin(1e-12));
        CHECK(post.dist[1] == Approx(0.5).margin(1e-12));
    }

    SECTION("all-zero column is unsupported") {
        const TermPosterior post = term_posterior(h_hat, prior, 1, kAssoc);
        CHECK_FALSE(post.supported);
    }

    SECTION("sub-threshold residuals do not create support") {
        const Eigen::MatrixXd residual = mat({{1e-9, 0.4}, {1e-9, 0.6}});
        CHECK_FALSE(term_posterior(residual, prior, 0, kAssoc).supported);
        CHECK(term_posterior(residual, prior, 1, kAssoc).supported);
    }

    SECTION("skewed prior shifts the posterior") {
        const TopicPrior skew{{0.9, 0.1}};
        const TermPosterior post = term_posterior(h_hat, skew, 0, kAssoc);
        // (0.27, 0.01) renormalized.
        CHECK(post.dist[0] == Approx(0.27 / 0.28).margin(1e-12));
        CHECK(post.dist[1] == Approx(0.01 / 0.28).margin(1e-12));
    }

    SECTION("out-of-range term or mismatched prior throws") {
        CHECK_THROWS_AS(term_posterior(h_hat, prior, 5, kAssoc), std::invalid_argument);
        CHECK_THROWS_AS(term_posterior(h_hat, TopicPrior{{1.0}}, 0, kAssoc),
                        std::invalid_argument);
    }
}

TEST_CASE("posterior is scale invariant in the numerators") {
    const Eigen::MatrixXd h_hat = mat({{0.3, 0.2}, {0.1, 0.4}, {0.6, 0.4}});
    const TopicPrior prior{{0.2, 0.3, 0.5}};
    const TermPosterior base = term_posterior(h_hat, prior, 0, kAssoc);

    // Scaling the H_hat column scales every numerator; dist is unchanged.
    Eigen::MatrixXd scaled = h_hat;
    scaled.col(0) *= 7.5;
    const TermPosterior after = term_posterior(scaled, prior, 0, kAssoc);
    for (std::size_t i = 0; i < base.dist.size(); ++i)
        CHECK(after.dist[i] == Approx(base.dist[i]).margin(1e-12));
}

TEST_CASE("posterior support consistency and monotonicity") {
    const TopicPrior prior{{0.5, 0.25, 0.25}};
    Eigen::MatrixXd h_hat = mat({{0.5, 0.0}, {0.5, 0.0}, {0.0, 1.0}});
    const TermPosterior post = term_posterior(h_hat, prior, 0, kAssoc);
    for (int topic = 0; topic < 3; ++topic) {
        if (post.dist[static_cast<std::size_t>(topic)] > 0.0) {
            CHECK(h_hat(topic, 0) > 0.0);
            CHECK(prior.probs[static_cast<std::size_t>(topic)] > 0.0);
        }
    }

    // Raising one H_hat entry never lowers that topic's posterior share.
    Eigen::MatrixXd bumped = h_hat;
    bumped(1, 0) = 0.9;
    const TermPosterior after = term_posterior(bumped, prior, 0, kAssoc);
    CHECK(after.dist[1] >= post.dist[1]);
}
