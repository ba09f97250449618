#include <gtest/gtest.h>

#include "osgda/matrix.hpp"

using osgda::DenseMatrix;

TEST(Matrix, IdentityMultiplication) {
  DenseMatrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  DenseMatrix out;
  osgda::matmul(DenseMatrix::eye(2), a, out);
  EXPECT_EQ(out.data, a.data);
}

TEST(Matrix, AnnihilationCase) {
  DenseMatrix a(2, 2);
  a(0, 0) = 1;
  DenseMatrix b(2, 1);
  b(1, 0) = 5;
  DenseMatrix out;
  osgda::matmul(a, b, out);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(1, 0), 0.0);
}

TEST(Matrix, ShapeMismatchNamesBothShapes) {
  DenseMatrix a(2, 3), b(2, 2), out;
  try {
    osgda::matmul(a, b, out);
    FAIL() << "expected dimension error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2x2"), std::string::npos) << msg;
  }
}

TEST(Matrix, TransposedAccumulatorsAgreeWithPlainMatmul) {
  DenseMatrix a(3, 2), b(3, 4);
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] = 0.1 * static_cast<double>(i) - 0.2;
  for (std::size_t i = 0; i < b.size(); ++i) b.data[i] = 0.05 * static_cast<double>(i) + 0.1;
  // a^T * b via matmul_tn_add vs explicit transpose
  DenseMatrix at(2, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) at(j, i) = a(i, j);
  DenseMatrix want;
  osgda::matmul(at, b, want);
  DenseMatrix got(2, 4);
  osgda::matmul_tn_add(a, b, got);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.data[i], want.data[i], 1e-12);
}

TEST(Matrix, AllFinite) {
  DenseMatrix a(1, 2, 1.0);
  EXPECT_TRUE(osgda::all_finite(a));
  a(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(osgda::all_finite(a));
}
