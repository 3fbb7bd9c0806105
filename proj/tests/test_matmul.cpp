#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "seq/matmul.hpp"
#include "seq/parallel.hpp"
#include "seq/rng.hpp"
#include "test_util.hpp"

using seq::Tensor;

namespace {

Tensor naive_mm(const Tensor& A, const Tensor& B, bool transpose_b) {
    const std::size_t m = A.rows();
    const std::size_t k = A.cols();
    const std::size_t n = transpose_b ? B.rows() : B.cols();
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += A(i, p) * (transpose_b ? B(j, p) : B(p, j));
            C(i, j) = s;
        }
    return C;
}

} // namespace

TEST_CASE("gemm kernels match a naive triple loop") {
    seq::Rng rng(5);
    for (int iter = 0; iter < 10; ++iter) {
        const std::size_t m = 1 + rng.next_below(17);
        const std::size_t k = 1 + rng.next_below(23);
        const std::size_t n = 1 + rng.next_below(19);
        const Tensor A = testutil::random_tensor({m, k}, rng);
        const Tensor B = testutil::random_tensor({k, n}, rng);
        const Tensor Bt = testutil::random_tensor({n, k}, rng);

        Tensor C({m, n});
        seq::gemm_nn(A.data.data(), B.data.data(), C.data.data(), m, k, n);
        const Tensor want_nn = naive_mm(A, B, false);
        for (std::size_t i = 0; i < C.numel(); ++i)
            REQUIRE(C.data[i] == Catch::Approx(want_nn.data[i]).epsilon(1e-12));

        Tensor D({m, n});
        seq::gemm_nt(A.data.data(), Bt.data.data(), D.data.data(), m, k, n);
        const Tensor want_nt = naive_mm(A, Bt, true);
        for (std::size_t i = 0; i < D.numel(); ++i)
            REQUIRE(D.data[i] == Catch::Approx(want_nt.data[i]).epsilon(1e-12));

        // A^T * B accumulation: C(k,n) += sum_r A(r,k) B(r,n)
        const Tensor A2 = testutil::random_tensor({m, k}, rng);
        const Tensor B2 = testutil::random_tensor({m, n}, rng);
        Tensor Acc({k, n});
        seq::gemm_tn_acc(A2.data.data(), B2.data.data(), Acc.data.data(), m, k, n);
        for (std::size_t kk = 0; kk < k; ++kk)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t r = 0; r < m; ++r) s += A2(r, kk) * B2(r, j);
                REQUIRE(Acc(kk, j) == Catch::Approx(s).epsilon(1e-12));
            }
    }
}

TEST_CASE("sqdist4 equals the scalar definition") {
    seq::Rng rng(8);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t d = 1 + rng.next_below(40);
        std::vector<double> a(d), b(d);
        for (auto& v : a) v = rng.next_normal();
        for (auto& v : b) v = rng.next_normal();
        REQUIRE(seq::sqdist4(a.data(), b.data(), d) ==
                Catch::Approx(oracle::sq_distance(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("results are bit-identical across thread counts") {
    seq::Rng rng(21);
    const Tensor A = testutil::random_tensor({33, 47}, rng);
    const Tensor B = testutil::random_tensor({47, 29}, rng);
    Tensor C1({33, 29}), C4({33, 29});
    seq::set_threads(1);
    seq::gemm_nn(A.data.data(), B.data.data(), C1.data.data(), 33, 47, 29);
    seq::set_threads(4);
    seq::gemm_nn(A.data.data(), B.data.data(), C4.data.data(), 33, 47, 29);
    seq::set_threads(1);
    REQUIRE(C1.data == C4.data);
}
