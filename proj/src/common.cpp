#include "sls/common.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sls {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::SelfAdjointEigenSolver<Mat> eig(const Mat& a) {
  Mat s = 0.5 * (a + a.transpose());
  return Eigen::SelfAdjointEigenSolver<Mat>(s);
}

}  // namespace

Rng make_stream(std::uint64_t master_seed, std::uint64_t replicate,
                std::uint64_t tag) {
  std::uint64_t k = splitmix64(master_seed);
  k = splitmix64(k ^ replicate);
  k = splitmix64(k ^ (tag * 0xd1b54a32d192ed03ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(k),
                    static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

Vec standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  int k = std::min<int>(threads, static_cast<int>(n));
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Mat sym_sqrt(const Mat& a) {
  auto es = eig(a);
  Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Mat sym_inv_sqrt(const Mat& a) {
  auto es = eig(a);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw DomainError("sym_inv_sqrt: matrix is not positive definite");
  Vec d = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double max_eigenvalue(const Mat& a) { return eig(a).eigenvalues().maxCoeff(); }
double min_eigenvalue(const Mat& a) { return eig(a).eigenvalues().minCoeff(); }

}  // namespace sls
