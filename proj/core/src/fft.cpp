#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "pulsecancel/error.hpp"

namespace pulsecancel::detail {
namespace {

enum class PlanKind { ComplexForward, RealForward };

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(PlanKind kind, std::size_t n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (kind == PlanKind::ComplexForward) {
      std::vector<cplx> buf(n);
      auto* p = reinterpret_cast<fftw_complex*>(buf.data());
      plan = fftw_plan_dft_1d(len, p, p, FFTW_FORWARD, flags);
    } else {
      std::vector<double> in(n);
      std::vector<cplx> out(n / 2 + 1);
      plan = fftw_plan_dft_r2c_1d(len, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                  flags | FFTW_PRESERVE_INPUT);
    }
    if (plan == nullptr) throw Error(ErrorCode::Numerical, "FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<PlanKind, std::size_t>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void fft_forward(std::span<cplx> data) {
  if (data.empty()) return;
  fftw_plan plan = cache().get(PlanKind::ComplexForward, data.size());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

void rfft_forward(std::span<const double> in, std::span<cplx> out) {
  if (in.empty()) return;
  if (out.size() != in.size() / 2 + 1) throw Error(ErrorCode::InvalidArgument, "rfft output has wrong length");
  fftw_plan plan = cache().get(PlanKind::RealForward, in.size());
  // PRESERVE_INPUT plans never write to the input array.
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace pulsecancel::detail
