#include <exception>

#include <omp.h>

#include "mvb/branching.hpp"

namespace mvb {

std::vector<ReplicaRecord> run_ensemble_serial(const RateModel& model, const DynamicsSpec& dyn,
                                               const SimulationSpec& spec, std::size_t reps, std::uint64_t seed) {
  check_simulation(model, dyn, spec);
  std::vector<ReplicaRecord> out(reps);
  for (std::size_t r = 0; r < reps; ++r) out[r] = simulate_replica(model, dyn, spec, Stream::for_replica(seed, r));
  return out;
}

std::vector<ReplicaRecord> run_ensemble(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec,
                                        std::size_t reps, std::uint64_t seed, int threads) {
  check_simulation(model, dyn, spec);
  std::vector<ReplicaRecord> out(reps);
  std::exception_ptr err;
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<long long>(reps);
#pragma omp parallel for schedule(dynamic, 64) num_threads(nt)
  for (long long r = 0; r < n; ++r) {
    try {
      out[r] = simulate_replica(model, dyn, spec, Stream::for_replica(seed, static_cast<std::uint64_t>(r)));
    } catch (...) {
#pragma omp critical(mvb_ensemble_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace mvb
