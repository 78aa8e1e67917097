#include <gtest/gtest.h>

#include "sipkit/family.hpp"

using namespace sipkit;

namespace {
IntMatrix mat(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    IntMatrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (auto v : r) a(i, j++) = v;
        ++i;
    }
    return a;
}
IntVector vec(std::initializer_list<std::int64_t> xs) {
    IntVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (auto x : xs) v(i++) = x;
    return v;
}
}  // namespace

TEST(ValidateGamma, DoublingOk) {
    EXPECT_TRUE(validate_gamma(mat({{2}}), {vec({0}), vec({1})}).ok);
}

TEST(ValidateGamma, CongruentDigitsRejected) {
    const auto v = validate_gamma(mat({{2}}), {vec({0}), vec({2})});
    EXPECT_FALSE(v.ok);
    EXPECT_FALSE(v.reason.empty());
}

TEST(ValidateGamma, TwoIdentityOk) {
    EXPECT_TRUE(
        validate_gamma(mat({{2, 0}, {0, 2}}), {vec({0, 0}), vec({0, 1}), vec({1, 0}), vec({1, 1})}).ok);
}

TEST(ValidateGamma, WrongCardinalityRejected) {
    EXPECT_FALSE(validate_gamma(mat({{3}}), {vec({0}), vec({1})}).ok);
}

TEST(ValidateGamma, NonDilatingRejected) {
    // det = 2 but eigenvalue 1 on the diagonal.
    EXPECT_FALSE(validate_gamma(mat({{1, 0}, {0, 2}}), {vec({0, 0}), vec({0, 1})}).ok);
}

TEST(EnumerateGamma, MatchesBruteForce) {
    // A[0,1)^2 intersected with Z^2 has |det A| points; each must validate.
    for (const auto& a : {mat({{2, 0}, {0, 2}}), mat({{2, 1}, {0, 2}}), mat({{3, 1}, {1, 2}})}) {
        const auto g = enumerate_gamma(a);
        EXPECT_EQ(static_cast<std::int64_t>(g.size()), std::llabs(integer_determinant(a)));
        EXPECT_TRUE(validate_gamma(a, g).ok);
    }
}

TEST(IntegerDeterminant, Bareiss) {
    EXPECT_EQ(integer_determinant(mat({{2, 1}, {0, 2}})), 4);
    EXPECT_EQ(integer_determinant(mat({{1, 2, 3}, {4, 5, 6}, {7, 8, 10}})), -3);
}

TEST(PiecewiseAffine, SlopesMustSumToOne) {
    PiecewiseAffine bad{{0.5, 0.4}, {0.0, 0.5}};
    EXPECT_THROW(bad.validate(), SpecError);
    PiecewiseAffine one_branch{{1.0}, {0.0}};
    EXPECT_THROW(one_branch.validate(), SpecError);
    EXPECT_NO_THROW(tent_branches().validate());
    EXPECT_DOUBLE_EQ(tent_branches().alpha_bar(), 0.5);
}

TEST(LinearProcess, PowerLawNeedsExponentAboveOne) {
    LinearProcess lp;
    lp.power_law = PowerLaw{1.0, 1.0};
    EXPECT_THROW(lp.validate(), SpecError);
    lp.power_law = PowerLaw{1.0, 2.0};
    EXPECT_NO_THROW(lp.validate());
    EXPECT_DOUBLE_EQ(lp.coefficient(0), 1.0);
    EXPECT_DOUBLE_EQ(lp.coefficient(3), 1.0 / 9.0);
}

TEST(LinearProcess, TailNorms) {
    LinearProcess lp;
    for (int i = 0; i < 50; ++i) lp.coefficients.push_back(std::ldexp(1.0, -i));
    EXPECT_NEAR(lp.tail_l2(3), std::sqrt(std::pow(4.0, -3) * 4.0 / 3.0), 1e-15);
    EXPECT_NEAR(lp.tail_l1(2), 0.5, 1e-14);
}

TEST(Families, CubePreservation) {
    EXPECT_TRUE(doubling_map().cube_preserving());
    EXPECT_TRUE(scaled_identity(2, 2).cube_preserving());
    EXPECT_TRUE(has_affine_structure(doubling_map()));
    EXPECT_FALSE(has_affine_structure(LinearProcess{}));
}

TEST(Families, StateDimAndName) {
    EXPECT_EQ(state_dim(scaled_identity(2, 2)), 2);
    EXPECT_EQ(state_dim(tent_branches()), 1);
    EXPECT_FALSE(family_name(doubling_map()).empty());
}

TEST(IteratedRandomFunction, Validation) {
    IteratedRandomFunction f;
    f.contraction.rho = 1.0;
    EXPECT_THROW(f.validate(), SpecError);
}
